//! Ward-level indicators aggregated from snapshots, venues and spending.

mod formulas;
mod panel;

pub use formulas::{
    cultural_expenditure_advantage, cultural_venue_advantage, growth_rate, growth_rate_opt, ior, location_quotient,
};
pub(crate) use panel::fmt_opt;
pub use panel::{
    all_ward_centralities, build_metrics_panel, build_metrics_panel_with, venue_creation, ward_acc,
    ward_centralities, GrowthRow, MetricsError, PanelInputs, Variable, WardMetricsPanel, WardMetricsRow,
};
