use super::GridSignal;

/// Summed-area table with one guard row/column of zeros per axis.
///
/// `table[i]` (1-D) holds the sum of `source[0..i]`, so any half-open box sum
/// is a signed combination of `2^d` entries.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    shape: Vec<usize>,
    table: Vec<f64>,
}

impl IntegralImage {
    pub fn new(signal: &GridSignal) -> Self {
        let shape = signal.shape().to_vec();
        let v = signal.values();
        let table = match shape[..] {
            [n] => {
                let mut t = Vec::with_capacity(n + 1);
                let mut acc = 0.0;
                t.push(0.0);
                for &x in v {
                    acc += x;
                    t.push(acc);
                }
                t
            }
            [rows, cols] => {
                let w = cols + 1;
                let mut t = vec![0.0; (rows + 1) * w];
                for r in 0..rows {
                    let mut row_acc = 0.0;
                    for c in 0..cols {
                        row_acc += v[r * cols + c];
                        t[(r + 1) * w + c + 1] = t[r * w + c + 1] + row_acc;
                    }
                }
                t
            }
            _ => unreachable!("GridSignal is 1-D or 2-D"),
        };
        IntegralImage { shape, table }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Guarded prefix-sum table, row-major with each axis one longer than the source.
    pub fn cumulative(&self) -> &[f64] {
        &self.table
    }

    /// Sum over the half-open box `[lo, hi)`; bounds are per axis.
    pub fn box_sum(&self, lo: &[usize], hi: &[usize]) -> f64 {
        match self.shape[..] {
            [n] => {
                debug_assert!(lo[0] <= hi[0] && hi[0] <= n);
                self.table[hi[0]] - self.table[lo[0]]
            }
            [rows, cols] => {
                debug_assert!(hi[0] <= rows && hi[1] <= cols);
                let w = cols + 1;
                let t = &self.table;
                t[hi[0] * w + hi[1]] - t[lo[0] * w + hi[1]] - t[hi[0] * w + lo[1]]
                    + t[lo[0] * w + lo[1]]
            }
            _ => unreachable!(),
        }
    }
}

/// Up to two half-open source ranges covered by one window along one axis.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Pieces {
    ranges: [(usize, usize); 2],
    count: u8,
}

impl Pieces {
    fn push(&mut self, lo: usize, hi: usize) {
        if lo < hi {
            self.ranges[self.count as usize] = (lo, hi);
            self.count += 1;
        }
    }

    fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ranges[..self.count as usize].iter().copied()
    }
}

/// Source ranges for every output index along one axis.
///
/// Output `a` covers `[start(a), start(a) + len)` of a source axis of length
/// `n`; with `wrap` the window is taken modulo `n` (requires `len <= n`),
/// otherwise it is clipped to `[0, n)`.
pub(crate) fn axis_pieces(
    out_len: usize,
    n: usize,
    len: usize,
    wrap: bool,
    start: impl Fn(usize) -> isize,
) -> Vec<Pieces> {
    (0..out_len)
        .map(|a| {
            let s = start(a);
            let mut p = Pieces::default();
            if wrap {
                debug_assert!(len <= n);
                let s = s.rem_euclid(n as isize) as usize;
                if s + len <= n {
                    p.push(s, s + len);
                } else {
                    p.push(s, n);
                    p.push(0, s + len - n);
                }
            } else {
                let lo = s.max(0) as usize;
                let hi = (s + len as isize).clamp(0, n as isize) as usize;
                p.push(lo.min(hi), hi);
            }
            p
        })
        .collect()
}

/// Window sums of `source` over per-axis piece lists, in `O(outputs · 4^d)`.
pub(crate) fn windowed_sums(table: &IntegralImage, axes: &[Vec<Pieces>]) -> Vec<f64> {
    match axes {
        [a0] => a0
            .iter()
            .map(|p| p.iter().map(|(lo, hi)| table.box_sum(&[lo], &[hi])).sum())
            .collect(),
        [a0, a1] => {
            let mut out = Vec::with_capacity(a0.len() * a1.len());
            for rp in a0 {
                for cp in a1 {
                    let mut acc = 0.0;
                    for (r0, r1) in rp.iter() {
                        for (c0, c1) in cp.iter() {
                            acc += table.box_sum(&[r0, c0], &[r1, c1]);
                        }
                    }
                    out.push(acc);
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_1d() {
        let s = GridSignal::from_1d(vec![1.0, 1.0, 1.0]).unwrap();
        let ii = IntegralImage::new(&s);
        assert_eq!(ii.cumulative(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(ii.box_sum(&[0], &[3]), 3.0);
    }

    #[test]
    fn ones_2d_windows() {
        let s = GridSignal::filled(&[3, 3], 1.0).unwrap();
        let ii = IntegralImage::new(&s);
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(ii.box_sum(&[r, c], &[r + 2, c + 2]), 4.0);
            }
        }
        assert_eq!(ii.box_sum(&[0, 0], &[3, 3]), 9.0);
    }

    #[test]
    fn pieces_wrap_and_clip() {
        let w = axis_pieces(4, 4, 2, true, |a| a as isize);
        assert_eq!(w[3].iter().collect::<Vec<_>>(), vec![(3, 4), (0, 1)]);
        let c = axis_pieces(5, 4, 2, false, |a| a as isize - 1);
        assert_eq!(c[0].iter().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(c[4].iter().collect::<Vec<_>>(), vec![(3, 4)]);
    }
}
