//! Dense numerical substrate: matrices, feed-forward networks with exact
//! reverse-mode gradients, Adam, seeded random streams and a central
//! finite-difference oracle.

mod adam;
mod gradcheck;
mod matrix;
mod mlp;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{finite_diff_gradient, max_relative_error};
pub use matrix::Matrix;
pub use mlp::{sigmoid, Activation, Dense, ForwardTrace, Mlp, MlpGrads};
pub use rng::RngStream;

/// Names and lengths of the segments of a flat parameter vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamLayout {
    segments: Vec<(String, usize)>,
}

impl ParamLayout {
    pub fn push(&mut self, name: impl Into<String>, len: usize) {
        self.segments.push((name.into(), len));
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|(_, n)| n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segments(&self) -> impl Iterator<Item = (&str, std::ops::Range<usize>)> {
        let mut at = 0;
        self.segments.iter().map(move |(name, n)| {
            let r = at..at + n;
            at += n;
            (name.as_str(), r)
        })
    }

    /// Name of the segment holding flat index `i`, with the offset inside it.
    pub fn locate(&self, i: usize) -> Option<(&str, usize)> {
        self.segments()
            .find(|(_, r)| r.contains(&i))
            .map(|(name, r)| (name, i - r.start))
    }
}
