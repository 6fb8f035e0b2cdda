/// The box `[0, base)^dims` of exponent vectors, numbered in mixed radix
/// with the first coordinate most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentSpace {
    pub dims: usize,
    pub base: usize,
}

impl ExponentSpace {
    pub fn new(dims: usize, base: usize) -> Self {
        ExponentSpace { dims, base }
    }

    pub fn len(&self) -> usize {
        self.base.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of `alpha`, or `None` if some exponent falls outside the box.
    pub fn index(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.dims {
            return None;
        }
        alpha.iter().try_fold(0usize, |acc, &a| {
            (a < self.base).then_some(acc * self.base + a)
        })
    }

    pub fn exponents(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims];
        for slot in out.iter_mut().rev() {
            *slot = index % self.base;
            index /= self.base;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len()).map(|i| self.exponents(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let sp = ExponentSpace::new(3, 4);
        assert_eq!(sp.len(), 64);
        for (i, a) in sp.iter().enumerate() {
            assert_eq!(sp.index(&a), Some(i));
        }
        assert_eq!(sp.index(&[0, 4, 0]), None);
        assert_eq!(sp.index(&[0, 0]), None);
    }

    #[test]
    fn zero_dimensional_box_has_one_point() {
        let sp = ExponentSpace::new(0, 3);
        assert_eq!(sp.len(), 1);
        assert_eq!(sp.index(&[]), Some(0));
    }
}
