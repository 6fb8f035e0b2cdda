use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::random::complex_gaussian;

/// One block-fading draw of every uplink and downlink coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `M x N`; entry `(i, j)` is the fade from user `j + 1` to EN `i + 1`.
    pub h: DMatrix<Complex64>,
    /// `N x M`; entry `(j, i)` is the fade from EN `i + 1` to user `j + 1`.
    pub g: DMatrix<Complex64>,
    pub id: u64,
}

impl ChannelRealization {
    /// Rayleigh fading with amplitude scale `sigma`, so `E|h|^2 = 2 sigma^2`.
    /// Uplink entries are drawn first, row by row, then downlink entries.
    pub fn draw<R: Rng + ?Sized>(m: usize, n: usize, sigma: f64, rng: &mut R, id: u64) -> Self {
        let var = 2.0 * sigma * sigma;
        let h = DMatrix::from_row_iterator(
            m,
            n,
            (0..m * n)
                .map(|_| complex_gaussian(rng, var))
                .collect::<Vec<_>>(),
        );
        let g = DMatrix::from_row_iterator(
            n,
            m,
            (0..m * n)
                .map(|_| complex_gaussian(rng, var))
                .collect::<Vec<_>>(),
        );
        ChannelRealization { h, g, id }
    }

    /// User `j` to EN `i`, 1-based.
    pub fn uplink(&self, i: usize, j: usize) -> Complex64 {
        self.h[(i - 1, j - 1)]
    }

    /// EN `i` to user `j`, 1-based.
    pub fn downlink(&self, j: usize, i: usize) -> Complex64 {
        self.g[(j - 1, i - 1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::trial_rng;

    #[test]
    fn shapes_and_indexing() {
        let c = ChannelRealization::draw(2, 3, 1.0, &mut trial_rng(0, 0), 7);
        assert_eq!(c.h.shape(), (2, 3));
        assert_eq!(c.g.shape(), (3, 2));
        assert_eq!(c.uplink(2, 3), c.h[(1, 2)]);
        assert_eq!(c.downlink(3, 1), c.g[(2, 0)]);
        assert_eq!(c.id, 7);
    }

    #[test]
    fn draw_is_reproducible() {
        let a = ChannelRealization::draw(4, 4, 1.0, &mut trial_rng(9, 2), 2);
        let b = ChannelRealization::draw(4, 4, 1.0, &mut trial_rng(9, 2), 2);
        assert_eq!(a, b);
    }
}
