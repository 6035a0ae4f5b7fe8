//! Analysis reports: JSON object plus a one-row CSV rendering.

use serde::Serialize;

use crate::analysis::FactorizationReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub dataset: String,
    pub group: String,
    pub timestamp: u64,
    pub tool_version: String,
    #[serde(flatten)]
    pub factorization: FactorizationReport,
}

pub const CSV_HEADER: &str = "dataset,group,timestamp,tool_version,epsilon,base_size,product_size,\
separation_threshold,isometry_ok,degenerate,n_base,n_base_certified_exact,n_product,\
n_product_certified_exact,ratio,ratio_bound_applicable";

impl AnalysisReport {
    pub fn new(dataset: &str, group: &str, factorization: FactorizationReport) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        AnalysisReport {
            dataset: dataset.to_string(),
            group: group.to_string(),
            timestamp,
            tool_version: TOOL_VERSION.to_string(),
            factorization,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV row matching `CSV_HEADER`.
    pub fn to_csv_row(&self) -> String {
        let f = &self.factorization;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.group,
            self.timestamp,
            self.tool_version,
            f.epsilon,
            f.base_size,
            f.product_size,
            f.separation_threshold,
            f.isometry_ok,
            f.degenerate,
            f.n_base.size,
            f.n_base.certified_exact,
            f.n_product.size,
            f.n_product.certified_exact,
            f.ratio,
            f.ratio_bound_applicable
        )
    }
}
