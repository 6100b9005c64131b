//! Reference methods: PCA to two components and a one-vs-rest linear SVC,
//! which also classifies every latent embedding.

mod eigen;
mod pca;
mod svc;

pub use eigen::symmetric_eigen;
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use svc::{svc_fit, svc_objective, svc_predict, SvcConfig, SvcModel};
