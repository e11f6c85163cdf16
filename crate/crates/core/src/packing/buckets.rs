// Uniform bucket index over balls on the torus. A ball is registered in every
// bucket its bounding box touches, so any ball meeting a query box is reported.

pub(crate) struct BallBuckets {
    dim: usize,
    per_axis: usize,
    cells: Vec<Vec<u32>>,
}

impl BallBuckets {
    pub fn new(dim: usize, per_axis: usize) -> Self {
        Self {
            dim,
            per_axis,
            cells: vec![Vec::new(); per_axis.pow(dim as u32)],
        }
    }

    fn axis_range(&self, lo: f64, hi: f64) -> Vec<usize> {
        let n = self.per_axis as i64;
        let a = (lo * n as f64).floor() as i64;
        let b = (hi * n as f64).floor() as i64;
        if b - a + 1 >= n {
            return (0..self.per_axis).collect();
        }
        (a..=b).map(|i| i.rem_euclid(n) as usize).collect()
    }

    fn for_each_cell<F: FnMut(usize)>(&self, center: &[f64], half: f64, mut f: F) {
        let ranges: Vec<Vec<usize>> = (0..self.dim)
            .map(|k| self.axis_range(center[k] - half, center[k] + half))
            .collect();
        let mut idx = vec![0usize; self.dim];
        loop {
            let mut flat = 0;
            for k in 0..self.dim {
                flat = flat * self.per_axis + ranges[k][idx[k]];
            }
            f(flat);
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < ranges[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    pub fn insert(&mut self, id: u32, center: &[f64], radius: f64) {
        let mut touched = Vec::new();
        self.for_each_cell(center, radius, |c| touched.push(c));
        for c in touched {
            self.cells[c].push(id);
        }
    }

    /// Ids of balls that may meet the box of half-width `half` around `center`, sorted and unique.
    pub fn query(&self, center: &[f64], half: f64) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_cell(center, half, |c| out.extend_from_slice(&self.cells[c]));
        out.sort_unstable();
        out.dedup();
        out
    }
}
