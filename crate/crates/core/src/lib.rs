// SPDX-License-Identifier: Apache-2.0

//! Synthesis of partially vertically connected 3D mesh NoCs for
//! heterogeneous 3D SoCs.

pub mod anneal;
pub mod area_kernel;
pub mod corpus;
pub mod error;
pub mod exact_baseline;
pub mod floorplan_sa;
pub mod formats;
pub mod layer_assign;
pub mod matching;
pub mod model;
pub mod net_route;
pub mod objective;
pub mod pipeline;
pub mod render;
pub mod simplex;
pub mod tsv_count;
pub mod vlink_sa;

pub use error::{Error, Result};
