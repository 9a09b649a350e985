//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool;
//! without it every helper runs the same closures in order. Chunk boundaries
//! never depend on the thread count, so both paths produce bit-identical
//! results.

use nalgebra::DMatrix;

/// Columns per chunk in [`matmul`].
pub const COLUMN_CHUNK: usize = 32;

/// How batch work is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

impl ExecMode {
    /// True when work will actually be dispatched to rayon.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// `a * b`, splitting the columns of `b` into fixed-size chunks.
pub fn matmul(mode: ExecMode, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let n = b.ncols();
    if n <= COLUMN_CHUNK {
        return a * b;
    }
    let chunks = n.div_ceil(COLUMN_CHUNK);
    let parts = map_indexed(mode, chunks, |i| {
        let start = i * COLUMN_CHUNK;
        let width = COLUMN_CHUNK.min(n - start);
        a * b.columns(start, width)
    });
    let mut out = DMatrix::zeros(a.nrows(), n);
    for (i, part) in parts.into_iter().enumerate() {
        let start = i * COLUMN_CHUNK;
        out.columns_mut(start, part.ncols()).copy_from(&part);
    }
    out
}
