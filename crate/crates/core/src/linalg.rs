//! Small dense matrix kernels backing convolution and dense layers.
//!
//! All matrices are row-major slices. The multiply kernels block over four
//! output rows so each pass over the right-hand operand feeds four
//! independent fused-multiply-add streams; dot products unroll into eight
//! accumulators to break the floating-point dependency chain. Accumulation
//! order is fixed, so results are bit-reproducible run to run.

use crate::scalar::Scalar;

/// C = A * B, where A is m x k and B is k x n.
pub fn matmul<E: Scalar>(a: &[E], b: &[E], m: usize, k: usize, n: usize) -> Vec<E> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![E::ZERO; m * n];

    let mut i = 0;
    // Four output rows per pass: one load of each B row feeds four FMAs.
    while i + 4 <= m {
        let (a0, a1) = (&a[i * k..(i + 1) * k], &a[(i + 1) * k..(i + 2) * k]);
        let (a2, a3) = (&a[(i + 2) * k..(i + 3) * k], &a[(i + 3) * k..(i + 4) * k]);
        let (r0, rest) = c[i * n..(i + 4) * n].split_at_mut(n);
        let (r1, rest) = rest.split_at_mut(n);
        let (r2, r3) = rest.split_at_mut(n);
        for p in 0..k {
            let (v0, v1, v2, v3) = (a0[p], a1[p], a2[p], a3[p]);
            let b_row = &b[p * n..(p + 1) * n];
            for j in 0..n {
                let bv = b_row[j];
                r0[j] = v0.mul_add(bv, r0[j]);
                r1[j] = v1.mul_add(bv, r1[j]);
                r2[j] = v2.mul_add(bv, r2[j]);
                r3[j] = v3.mul_add(bv, r3[j]);
            }
        }
        i += 4;
    }
    while i < m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (p, &a_ip) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (c_v, &b_v) in c_row.iter_mut().zip(b_row) {
                *c_v = a_ip.mul_add(b_v, *c_v);
            }
        }
        i += 1;
    }
    c
}

/// C = A^T * B, where A is m x k and B is m x n; C is k x n.
pub fn matmul_at<E: Scalar>(a: &[E], b: &[E], m: usize, k: usize, n: usize) -> Vec<E> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    let mut c = vec![E::ZERO; k * n];

    let mut i = 0;
    // Four input rows per pass so C is walked a quarter as often.
    while i + 4 <= m {
        let (a0, a1) = (&a[i * k..(i + 1) * k], &a[(i + 1) * k..(i + 2) * k]);
        let (a2, a3) = (&a[(i + 2) * k..(i + 3) * k], &a[(i + 3) * k..(i + 4) * k]);
        let (b0, b1) = (&b[i * n..(i + 1) * n], &b[(i + 1) * n..(i + 2) * n]);
        let (b2, b3) = (&b[(i + 2) * n..(i + 3) * n], &b[(i + 3) * n..(i + 4) * n]);
        for p in 0..k {
            let (v0, v1, v2, v3) = (a0[p], a1[p], a2[p], a3[p]);
            let c_row = &mut c[p * n..(p + 1) * n];
            for j in 0..n {
                let mut acc = v0.mul_add(b0[j], c_row[j]);
                acc = v1.mul_add(b1[j], acc);
                acc = v2.mul_add(b2[j], acc);
                acc = v3.mul_add(b3[j], acc);
                c_row[j] = acc;
            }
        }
        i += 4;
    }
    while i < m {
        let a_row = &a[i * k..(i + 1) * k];
        let b_row = &b[i * n..(i + 1) * n];
        for (p, &a_ip) in a_row.iter().enumerate() {
            let c_row = &mut c[p * n..(p + 1) * n];
            for (c_v, &b_v) in c_row.iter_mut().zip(b_row) {
                *c_v = a_ip.mul_add(b_v, *c_v);
            }
        }
        i += 1;
    }
    c
}

/// C = A * B^T, where A is m x k and B is n x k; C is m x n.
///
/// Multi-row inputs transpose B once and reuse the blocked `matmul`; the
/// single-row case (dense backward) runs unrolled dot products instead,
/// since transposing the weight matrix per call would dwarf the dots.
pub fn matmul_bt<E: Scalar>(a: &[E], b: &[E], m: usize, k: usize, n: usize) -> Vec<E> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    if m > 1 {
        let bt = transpose(b, n, k);
        return matmul(a, &bt, m, k, n);
    }
    let mut c = vec![E::ZERO; m * n];
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (j, c_v) in c_row.iter_mut().enumerate() {
            *c_v = dot(a_row, &b[j * k..(j + 1) * k]);
        }
    }
    c
}

/// Row-major transpose of a rows x cols matrix.
pub fn transpose<E: Scalar>(src: &[E], rows: usize, cols: usize) -> Vec<E> {
    debug_assert_eq!(src.len(), rows * cols);
    let mut out = vec![E::ZERO; rows * cols];
    for r in 0..rows {
        let row = &src[r * cols..(r + 1) * cols];
        for (cidx, &v) in row.iter().enumerate() {
            out[cidx * rows + r] = v;
        }
    }
    out
}

/// Dot product with eight independent accumulators.
pub fn dot<E: Scalar>(a: &[E], b: &[E]) -> E {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [E::ZERO; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (av, bv) = (&a[c * 8..(c + 1) * 8], &b[c * 8..(c + 1) * 8]);
        for lane in 0..8 {
            acc[lane] = av[lane].mul_add(bv[lane], acc[lane]);
        }
    }
    let mut tail = E::ZERO;
    for i in chunks * 8..a.len() {
        tail = a[i].mul_add(b[i], tail);
    }
    let mut total = tail;
    for lane in acc {
        total += lane;
    }
    total
}
