//! Register-blocked matrix products on row-major slices.

const MR: usize = 4;
const NR: usize = 4;

/// `c += a·b` with `a: m×k`, `b: k×n`, `c: m×n`.
pub(crate) fn gemm_acc(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    let (m_main, n_main) = (m - m % MR, n - n % NR);
    let mut panel = alloc::vec![0.0; k * MR];
    for i0 in (0..m_main).step_by(MR) {
        for (p, slot) in panel.chunks_exact_mut(MR).enumerate() {
            for (ii, v) in slot.iter_mut().enumerate() {
                *v = a[(i0 + ii) * k + p];
            }
        }
        for j0 in (0..n_main).step_by(NR) {
            let mut acc = [[0.0f64; NR]; MR];
            for (a4, brow) in panel.chunks_exact(MR).zip(b.chunks_exact(n)) {
                let brow = &brow[j0..j0 + NR];
                for (row, av) in acc.iter_mut().zip(a4) {
                    for (r, bv) in row.iter_mut().zip(brow) {
                        *r += av * bv;
                    }
                }
            }
            for (ii, row) in acc.iter().enumerate() {
                for (cv, r) in c[(i0 + ii) * n + j0..][..NR].iter_mut().zip(row) {
                    *cv += r;
                }
            }
        }
        for ii in 0..MR {
            let crow = &mut c[(i0 + ii) * n..(i0 + ii + 1) * n];
            for (a4, brow) in panel.chunks_exact(MR).zip(b.chunks_exact(n)) {
                for (cv, bv) in crow[n_main..].iter_mut().zip(&brow[n_main..]) {
                    *cv += a4[ii] * bv;
                }
            }
        }
    }
    for i in m_main..m {
        for p in 0..k {
            let av = a[i * k + p];
            for (cv, bv) in c[i * n..(i + 1) * n].iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *cv += av * bv;
            }
        }
    }
}
