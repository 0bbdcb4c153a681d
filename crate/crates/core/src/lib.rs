//! Bridge detection in nearest-neighbor graphs of noisy manifold samples.
//!
//! The crate builds k-NN and delta-ball graphs, flags "bridge" edges with
//! one of four decision rules, and re-estimates geodesic distances on the
//! penalized graph. Two benchmark drivers live alongside: a noisy Swiss
//! roll and blind-angle tomography.

pub mod error;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod paths;
pub mod rules;
pub mod stats;
pub mod swissroll;
pub mod tomography;

pub use error::{Error, Result};
pub use graph::{build_ball_graph, build_knn_graph, BridgeSet, NNGraph, PenalizedGraph, PointCloud, Rule};
pub use kernels::{diffusion_kernel, DiffusionKernel, Epsilon, NeighborProbability};
pub use linalg::{EigenPairs, SparseMatrix};
pub use paths::{adjusted_geodesics, dijkstra_sssp, geodesics};
pub use rules::{detect, EdgeStatistic, RuleConfig};

pub use nalgebra::{DMatrix, DVector};
