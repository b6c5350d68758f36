//! Exterior powers: lexicographic `k`-subsets, additive compound matrices,
//! decomposable wedges and the top-degree wedge pairing.

use num_complex::Complex64;

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Sign of the permutation that sorts `v` (entries distinct).
pub fn sort_sign(v: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Index tables for the `k`-th exterior power of `R^n`.
#[derive(Debug, Clone)]
pub struct ExteriorPower {
    pub n: usize,
    pub k: usize,
    pub subsets: Vec<Vec<usize>>,
    /// Nonzero pattern of the additive compound: `(row, col, p, q, sign)`
    /// meaning `C[row][col] += sign * m[p][q]`.
    pattern: Vec<(usize, usize, usize, usize, f64)>,
}

impl ExteriorPower {
    pub fn new(n: usize, k: usize) -> Self {
        let subsets = subsets(n, k);
        let index = |s: &[usize]| subsets.iter().position(|t| t.as_slice() == s).expect("subset");
        let mut pattern = Vec::new();
        for (col, set) in subsets.iter().enumerate() {
            // derivation rule on e_J: replace one factor e_j by m e_j
            for (slot, &j) in set.iter().enumerate() {
                for p in 0..n {
                    if p != j && set.contains(&p) {
                        continue;
                    }
                    let mut t = set.clone();
                    t[slot] = p;
                    let sign = sort_sign(&t);
                    t.sort_unstable();
                    pattern.push((index(&t), col, p, j, sign));
                }
            }
        }
        ExteriorPower { n, k, subsets, pattern }
    }

    pub fn dim(&self) -> usize {
        self.subsets.len()
    }

    /// Additive compound of a real row-major `n x n` matrix, row-major.
    pub fn compound_real(&self, m: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut c = vec![0.0; d * d];
        for &(row, col, p, q, s) in &self.pattern {
            c[row * d + col] += s * m[p * self.n + q];
        }
        c
    }

    /// Additive compound of a complex row-major matrix.
    pub fn compound(&self, m: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        let mut c = vec![Complex64::new(0.0, 0.0); d * d];
        for &(row, col, p, q, s) in &self.pattern {
            c[row * d + col] += m[p * self.n + q] * s;
        }
        c
    }

    /// Coordinates of `v_1 ^ ... ^ v_k` for the columns of the column-major
    /// `n x k` array `v`: the `k x k` minors on each row subset.
    pub fn wedge_columns(&self, v: &[Complex64]) -> Vec<Complex64> {
        let k = self.k;
        self.subsets
            .iter()
            .map(|rows| {
                let mut a: Vec<Complex64> = Vec::with_capacity(k * k);
                for c in 0..k {
                    for &r in rows {
                        a.push(v[c * self.n + r]);
                    }
                }
                det_col_major(&mut a, k)
            })
            .collect()
    }
}

/// Determinant by partial-pivot elimination (destroys `a`).
pub fn det_col_major(a: &mut [Complex64], k: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..k {
        let mut piv = c;
        for r in c + 1..k {
            if a[c * k + r].norm() > a[c * k + piv].norm() {
                piv = r;
            }
        }
        if a[c * k + piv].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != c {
            for cc in 0..k {
                a.swap(cc * k + c, cc * k + piv);
            }
            det = -det;
        }
        let d = a[c * k + c];
        det *= d;
        for r in c + 1..k {
            let f = a[c * k + r] / d;
            for cc in c..k {
                let t = a[cc * k + c];
                a[cc * k + r] -= f * t;
            }
        }
    }
    det
}

/// Pairing `Lambda^p x Lambda^q -> Lambda^n = C` for `p + q = n`.
#[derive(Debug, Clone)]
pub struct TopWedge {
    terms: Vec<(usize, usize, f64)>,
}

impl TopWedge {
    pub fn new(left: &ExteriorPower, right: &ExteriorPower) -> Self {
        assert_eq!(left.n, right.n);
        assert_eq!(left.k + right.k, left.n);
        let mut terms = Vec::new();
        for (i, a) in left.subsets.iter().enumerate() {
            for (j, b) in right.subsets.iter().enumerate() {
                if a.iter().any(|x| b.contains(x)) {
                    continue;
                }
                let mut joined = a.clone();
                joined.extend_from_slice(b);
                terms.push((i, j, sort_sign(&joined)));
            }
        }
        TopWedge { terms }
    }

    pub fn apply(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|&(i, j, s)| a[i] * b[j] * s).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn subset_counts() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 0).len(), 1);
        assert_eq!(subsets(5, 5).len(), 1);
        assert_eq!(subsets(4, 2)[0], vec![0, 1]);
        assert_eq!(subsets(4, 2)[5], vec![2, 3]);
    }

    #[test]
    fn wedge_pairing_is_determinant() {
        // columns of a 4x4 matrix split 2 + 2
        let m = [
            c(1.0, 0.5),
            c(2.0, 0.0),
            c(0.0, 1.0),
            c(3.0, -1.0),
            c(0.5, 0.0),
            c(-1.0, 2.0),
            c(1.0, 1.0),
            c(0.0, 0.0),
            c(2.0, 0.0),
            c(1.0, -1.0),
            c(4.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 3.0),
            c(1.0, 1.0),
            c(-2.0, 0.0),
            c(1.0, 0.5),
        ];
        let e = ExteriorPower::new(4, 2);
        let wa = e.wedge_columns(&m[0..8]);
        let wb = e.wedge_columns(&m[8..16]);
        let d = TopWedge::new(&e, &e).apply(&wa, &wb);
        let mut a = m.to_vec();
        let full = det_col_major(&mut a, 4);
        assert!((d - full).norm() < 1e-12);
    }

    #[test]
    fn compound_differentiates_wedges() {
        // d/dt (e^{tM} v1 ^ e^{tM} v2) at t = 0 equals M^(2) (v1 ^ v2)
        let n = 3;
        let m: Vec<f64> = vec![0.3, -1.0, 2.0, 0.5, 0.1, -0.7, 1.2, 0.4, -0.2];
        let v: Vec<Complex64> = [1.0, 0.2, -0.5, 0.3, 1.0, 0.7].iter().map(|&x| c(x, 0.0)).collect();
        let e = ExteriorPower::new(n, 2);
        let comp = e.compound_real(&m);
        let w0 = e.wedge_columns(&v);
        let t = 1e-6;
        let step = |s: f64| -> Vec<Complex64> {
            let mut out = v.clone();
            for col in 0..2 {
                for row in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += m[row * n + j] * v[col * n + j].re;
                    }
                    out[col * n + row] = c(v[col * n + row].re + s * acc, 0.0);
                }
            }
            out
        };
        let wp = e.wedge_columns(&step(t));
        let wm = e.wedge_columns(&step(-t));
        for i in 0..3 {
            let fd = (wp[i] - wm[i]) / (2.0 * t);
            let exact: Complex64 = (0..3).map(|j| w0[j] * comp[i * 3 + j]).sum();
            assert!((fd - exact).norm() < 1e-8, "{fd} {exact}");
        }
    }

    #[test]
    fn first_compound_is_identity_map() {
        let e = ExteriorPower::new(3, 1);
        let m = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        assert_eq!(e.compound_real(&m), m.to_vec());
        // top compound is the trace
        let t = ExteriorPower::new(3, 3);
        assert_eq!(t.compound_real(&m), vec![15.0]);
    }
}
