pub mod aggregator;
pub mod certificates;
pub mod psd;
pub mod scalar;

pub use aggregator::{aggregator_identity, AggregatorValues};
pub use certificates::{certify, certify_rows, ladder, schedule_for, CertificateReport, Check};
pub use psd::{certificate_matrix, gram, implied_factor, trace_product, CertificateMatrix, PsdVerdict};
