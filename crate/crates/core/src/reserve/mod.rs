//! Loss triangles, the link-ratio regression and next-diagonal prediction.

mod design;
mod fit;
mod predict;
mod triangle;

pub use design::{build_design, build_design_with, CoefKind, CoefLabel, Exemption, ReserveDesign};
pub use fit::{
    fit_cross_classified, fit_reserving, fit_reserving_with, CrossClassified, DevFactorTable,
    ReserveFit, ReserveModel, ReserveOptions, Strength,
};
pub use predict::{actual_totals, predict_next_diagonal, validate, LineMetrics, Prediction, PredictionRow};
pub use triangle::{
    link_ratios, read_next_diagonal, read_triangles, write_triangles, LinkRatio, LinkRatioSet,
    LossTriangle, NextDiagonal,
};
