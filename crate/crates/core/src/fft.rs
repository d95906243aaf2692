//! Three-dimensional complex FFT over row-major `[i1][i2][i3]` arrays.
//!
//! Axis-3 lines are contiguous and transformed in place. Lines along the
//! other two axes are copied in small groups to a per-thread buffer,
//! transformed there and written back.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::spectral::Grid;

/// Columns gathered per transpose block.
const BLOCK: usize = 16;

pub(crate) struct Fft3 {
    n: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

fn cache() -> &'static Mutex<HashMap<Grid, Arc<Fft3>>> {
    static CACHE: OnceLock<Mutex<HashMap<Grid, Arc<Fft3>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared plan for `grid`; plans are built once per grid shape.
pub(crate) fn plan(grid: Grid) -> Arc<Fft3> {
    let mut map = cache().lock().expect("fft plan cache poisoned");
    map.entry(grid)
        .or_insert_with(|| Arc::new(Fft3::new(grid)))
        .clone()
}

impl Fft3 {
    fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = [grid.n1, grid.n2, grid.n3];
        let forward = n.map(|len| planner.plan_fft_forward(len));
        let inverse = n.map(|len| planner.plan_fft_inverse(len));
        Self {
            n,
            forward,
            inverse,
        }
    }

    /// Unnormalized forward transform (sign −1 in the exponent).
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse transform (sign +1 in the exponent).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [n1, n2, n3] = self.n;
        assert_eq!(data.len(), n1 * n2 * n3);

        // axis 3: contiguous lines
        data.par_chunks_mut(n3 * n2).for_each_init(
            || vec![Complex64::default(); plans[2].get_inplace_scratch_len()],
            |scratch, chunk| plans[2].process_with_scratch(chunk, scratch),
        );
        // axis 2: stride n3 inside each of the n1 planes
        strided_pass(data, &plans[1], n2, n3, n1);
        // axis 1: stride n2*n3 across the whole array
        strided_pass(data, &plans[0], n1, n2 * n3, 1);
    }
}

/// Raw pointer that may cross threads; every task touches a disjoint set
/// of elements.
#[derive(Clone, Copy)]
struct SharedMut(*mut Complex64);
unsafe impl Send for SharedMut {}
unsafe impl Sync for SharedMut {}

/// Transforms the lines `o*len*stride + r + i*stride`, `i < len`, for every
/// outer index `o < outer` and inner offset `r < stride`. Lines are handled
/// in groups of `BLOCK` neighbouring offsets, so gathering reads whole
/// cache lines, and each group is copied to a small buffer, transformed
/// and scattered back.
fn strided_pass(data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>, len: usize, stride: usize, outer: usize) {
    let blocks_per_outer = stride.div_ceil(BLOCK);
    let base = SharedMut(data.as_mut_ptr());
    let total = data.len();
    (0..outer * blocks_per_outer).into_par_iter().for_each_init(
        || {
            (
                vec![Complex64::default(); BLOCK * len],
                vec![Complex64::default(); plan.get_inplace_scratch_len()],
            )
        },
        |(buf, scratch), task| {
            let ptr = base;
            let o = task / blocks_per_outer;
            let r0 = (task % blocks_per_outer) * BLOCK;
            let width = BLOCK.min(stride - r0);
            let origin = o * len * stride + r0;
            debug_assert!(origin + (len - 1) * stride + width <= total);
            // SAFETY: (o, r0..r0+width) pairs are distinct per task, so the
            // element sets touched by different tasks are disjoint, and all
            // indices stay below `total`.
            unsafe {
                for i in 0..len {
                    let row = ptr.0.add(origin + i * stride);
                    for b in 0..width {
                        buf[b * len + i] = *row.add(b);
                    }
                }
                plan.process_with_scratch(&mut buf[..width * len], scratch);
                for i in 0..len {
                    let row = ptr.0.add(origin + i * stride);
                    for b in 0..width {
                        *row.add(b) = buf[b * len + i];
                    }
                }
            }
        },
    );
}
