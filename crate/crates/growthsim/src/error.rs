use std::path::PathBuf;

use crate::percolation::Site;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Outer-boundary neighbours of a finite cluster span several clusters.
    /// Impossible on the triangular lattice, so this signals a bug.
    #[error("cluster {cluster} has outer-boundary neighbours in {found} distinct clusters")]
    SurroundingNotUnique { cluster: usize, found: usize },

    #[error("class of size {size} exceeds the enumeration cap {cap}")]
    ClassTooLarge { size: u128, cap: u64 },

    #[error("site ({}, {}) lies in the outer region; no can is defined there", .site.x, .site.y)]
    OuterRegion { site: Site },

    #[error("can {can} is type 1; Hamiltonian paths are built for type-0 cans only")]
    NotTypeZero { can: String },

    #[error("base graph of can {can} is disconnected ({reached} of {total} vertices reached)")]
    DisconnectedBase { can: String, reached: usize, total: usize },

    #[error("no G-edge joins can {child} to can {parent}")]
    NoCandidates { child: String, parent: String },

    #[error("exit event {index} needs the ball beyond the searched radius {searched}")]
    RadiusInsufficient { index: usize, searched: u32 },

    #[error("exit edge {index} is not a cut edge: dist(child end) = {child}, dist(parent end) = {parent:?}")]
    CutEdgeViolated { index: usize, child: u32, parent: Option<u32> },

    #[error("no exit events to summarise")]
    NoEvents,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
