//! Tables, roofline plots and output bundles.

mod bundle;
mod svg;
mod table;

pub use bundle::{sha256_hex, Format, Manifest, ManifestEntry, ReportBundle, MANIFEST_NAME};
pub use svg::{Marker, RooflinePlot, RooflineSeries};
pub use table::{
    candidate_code, eval_table, family_table, fmt6, pareto_table, search_table, sig6,
    speedup_table, stage_table, summary_table, Cell, Table,
};
