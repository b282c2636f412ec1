//! Symmetric LDLᵀ factorizations of the augmented KKT matrix.
//!
//! Neither factorization pivots: the solver keeps the matrix quasi-definite
//! through primal and dual regularization, and reads the inertia off the
//! signs of `D`.

use std::collections::BTreeSet;

/// Counts of positive, negative and zero pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

fn inertia_of(d: &[f64]) -> Inertia {
    let mut out = Inertia { positive: 0, negative: 0, zero: 0 };
    for &v in d {
        if v > 0.0 {
            out.positive += 1;
        } else if v < 0.0 {
            out.negative += 1;
        } else {
            out.zero += 1;
        }
    }
    out
}

/// Symmetric matrix pattern given as lower-triangle coordinates, with the
/// bookkeeping to scatter triplet values into a full CSC array.
#[derive(Debug, Clone)]
pub struct SymmetricPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// For triplet `k`, its position(s) in the CSC value array.
    scatter: Vec<(usize, Option<usize>)>,
}

impl SymmetricPattern {
    pub fn new(n: usize, lower: &[(usize, usize)]) -> Self {
        let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(i, j) in lower {
            debug_assert!(i >= j && i < n);
            cols[j].insert(i);
            cols[i].insert(j);
        }
        for (j, c) in cols.iter_mut().enumerate() {
            c.insert(j);
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in &cols {
            row_idx.extend(c.iter().copied());
            col_ptr.push(row_idx.len());
        }
        let find = |i: usize, j: usize| -> usize {
            let seg = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            col_ptr[j] + seg.binary_search(&i).expect("entry in pattern")
        };
        let scatter = lower
            .iter()
            .map(|&(i, j)| {
                if i == j {
                    (find(i, j), None)
                } else {
                    (find(i, j), Some(find(j, i)))
                }
            })
            .collect();
        SymmetricPattern { n, col_ptr, row_idx, scatter }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Full CSC values for the given triplet values (duplicates summed).
    pub fn scatter_values(&self, triplet_values: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.row_idx.len(), 0.0);
        for (&(a, b), &v) in self.scatter.iter().zip(triplet_values) {
            out[a] += v;
            if let Some(b) = b {
                out[b] += v;
            }
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|j| {
                self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
                    .iter()
                    .copied()
                    .filter(|&i| i != j)
                    .collect()
            })
            .collect()
    }
}

/// Minimum-degree ordering on the explicit elimination graph. Ties go to
/// the lowest index, so the result is deterministic.
pub fn minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut graph: Vec<BTreeSet<usize>> = adj.iter().map(|a| a.iter().copied().collect()).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (graph[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut graph[v]).into_iter().collect();
        for &a in &nbrs {
            queue.remove(&(graph[a].len(), a));
            graph[a].remove(&v);
        }
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                graph[a].insert(b);
                graph[b].insert(a);
            }
        }
        for &a in &nbrs {
            queue.insert((graph[a].len(), a));
        }
    }
    order
}

/// Sparse LDLᵀ with a fill-reducing permutation, split into a symbolic
/// phase (elimination tree, column counts) and a numeric phase.
#[derive(Debug, Clone)]
pub struct SparseLdl {
    pattern: SymmetricPattern,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<Option<usize>>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    values: Vec<f64>,
}

impl SparseLdl {
    pub fn analyze(pattern: SymmetricPattern) -> Self {
        let n = pattern.n;
        let perm = minimum_degree(&pattern.adjacency());
        let mut pinv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        let mut parent = vec![None; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            let kk = perm[k];
            for p in pattern.col_ptr[kk]..pattern.col_ptr[kk + 1] {
                let mut i = pinv[pattern.row_idx[p]];
                if i < k {
                    while flag[i] != k {
                        if parent[i].is_none() {
                            parent[i] = Some(k);
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i].expect("parent set above");
                    }
                }
            }
        }
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0);
        for k in 0..n {
            lp.push(lp[k] + lnz[k]);
        }
        let nnz = lp[n];
        SparseLdl {
            pattern,
            perm,
            pinv,
            parent,
            lp,
            li: vec![0; nnz],
            lx: vec![0.0; nnz],
            d: vec![0.0; n],
            values: Vec::new(),
        }
    }

    pub fn factor_nonzeros(&self) -> usize {
        self.lp[self.pattern.n]
    }

    /// Numeric factorization of the matrix whose lower triplets carry
    /// `triplet_values`. Returns `None` on a zero or non-finite pivot.
    pub fn factor(&mut self, triplet_values: &[f64]) -> Option<Inertia> {
        let n = self.pattern.n;
        let mut values = std::mem::take(&mut self.values);
        self.pattern.scatter_values(triplet_values, &mut values);
        let (ap, ai) = (&self.pattern.col_ptr, &self.pattern.row_idx);
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        let mut ok = true;
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let kk = self.perm[k];
            for p in ap[kk]..ap[kk + 1] {
                let mut i = self.pinv[ai[p]];
                if i <= k {
                    y[i] += values[p];
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        match self.parent[i] {
                            Some(next) => i = next,
                            None => break,
                        }
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            let mut dk = y[k];
            y[k] = 0.0;
            while top < n {
                let i = pattern[top];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = self.lp[i] + lnz[i];
                for p in self.lp[i]..p2 {
                    y[self.li[p]] -= self.lx[p] * yi;
                }
                let l_ki = yi / self.d[i];
                dk -= l_ki * yi;
                self.li[p2] = k;
                self.lx[p2] = l_ki;
                lnz[i] += 1;
                top += 1;
            }
            self.d[k] = dk;
            if dk == 0.0 || !dk.is_finite() {
                ok = false;
                break;
            }
        }
        self.values = values;
        ok.then(|| inertia_of(&self.d))
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.pattern.n;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                xj -= self.lx[p] * x[self.li[p]];
            }
            x[j] = xj;
        }
        for k in 0..n {
            b[self.perm[k]] = x[k];
        }
    }
}

/// Dense LDLᵀ in natural order.
#[derive(Debug, Clone)]
pub struct DenseLdl {
    lower: Vec<(usize, usize)>,
    n: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl DenseLdl {
    pub fn new(n: usize, lower: &[(usize, usize)]) -> Self {
        DenseLdl {
            lower: lower.to_vec(),
            n,
            l: vec![0.0; n * n],
            d: vec![0.0; n],
        }
    }

    pub fn factor(&mut self, triplet_values: &[f64]) -> Option<Inertia> {
        let n = self.n;
        let a = &mut self.l;
        a.iter_mut().for_each(|v| *v = 0.0);
        for (&(i, j), &v) in self.lower.iter().zip(triplet_values) {
            a[i * n + j] += v;
        }
        let mut w = vec![0.0; n];
        for j in 0..n {
            // w = L[j, ..j] ∘ D
            for k in 0..j {
                w[k] = a[j * n + k] * self.d[k];
            }
            let mut dj = a[j * n + j];
            for k in 0..j {
                dj -= a[j * n + k] * w[k];
            }
            if dj == 0.0 || !dj.is_finite() {
                return None;
            }
            self.d[j] = dj;
            a[j * n + j] = 1.0;
            for i in j + 1..n {
                let row = &a[i * n..i * n + j];
                let v = a[i * n + j] - row.iter().zip(&w[..j]).map(|(x, y)| x * y).sum::<f64>();
                a[i * n + j] = v / dj;
            }
        }
        Some(inertia_of(&self.d))
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.l[i * n + k] * b[k];
            }
            b[i] = v;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in i + 1..n {
                v -= self.l[k * n + i] * b[k];
            }
            b[i] = v;
        }
    }
}

/// Either factorization behind one interface.
#[derive(Debug, Clone)]
pub enum Factorization {
    Sparse(SparseLdl),
    Dense(DenseLdl),
}

impl Factorization {
    pub fn new(n: usize, lower: &[(usize, usize)], dense: bool) -> Self {
        if dense {
            Factorization::Dense(DenseLdl::new(n, lower))
        } else {
            Factorization::Sparse(SparseLdl::analyze(SymmetricPattern::new(n, lower)))
        }
    }

    pub fn factor(&mut self, triplet_values: &[f64]) -> Option<Inertia> {
        match self {
            Factorization::Sparse(f) => f.factor(triplet_values),
            Factorization::Dense(f) => f.factor(triplet_values),
        }
    }

    pub fn solve(&self, b: &mut [f64]) {
        match self {
            Factorization::Sparse(f) => f.solve(b),
            Factorization::Dense(f) => f.solve(b),
        }
    }
}

/// `y = A x` for a symmetric matrix stored as lower triplets.
pub fn sym_matvec(lower: &[(usize, usize)], values: &[f64], x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for (&(i, j), &v) in lower.iter().zip(values) {
        y[i] += v * x[j];
        if i != j {
            y[j] += v * x[i];
        }
    }
}

/// Restarted GMRES on `A x = b`, right-preconditioned by `precond`, starting
/// from `x`. Stops when `‖b - A x‖∞ ≤ tol` and returns that residual norm.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_restarts: usize,
) -> f64 {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(u, v)| u * v).sum::<f64>();
    let inf = |a: &[f64]| a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut ax = vec![0.0; n];
    let residual = |x: &[f64], ax: &mut Vec<f64>| -> Vec<f64> {
        apply(x, ax);
        b.iter().zip(ax.iter()).map(|(bi, ai)| bi - ai).collect()
    };
    let mut r = residual(x, &mut ax);
    let mut rn = inf(&r);
    for _ in 0..max_restarts {
        if rn <= tol {
            break;
        }
        let beta = dot(&r, &r).sqrt();
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart {
            let mut w = basis[k].clone();
            precond(&mut w);
            let mut v = vec![0.0; n];
            apply(&w, &mut v);
            for (j, q) in basis.iter().enumerate() {
                h[j][k] = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= h[j][k] * qi;
                }
            }
            let norm = dot(&v, &v).sqrt();
            h[k + 1][k] = norm;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            if norm == 0.0 || g[k].abs() <= 1e-3 * tol {
                break;
            }
            basis.push(v.iter().map(|vi| vi / norm).collect());
        }
        // back substitution and update x += M⁻¹ V y
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut t = g[i];
            for j in i + 1..k {
                t -= h[i][j] * y[j];
            }
            y[i] = t / h[i][i];
        }
        let mut u = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (ui, qi) in u.iter_mut().zip(&basis[j]) {
                *ui += yj * qi;
            }
        }
        precond(&mut u);
        let mut trial: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
        let tr = residual(&trial, &mut ax);
        let tn = inf(&tr);
        if !(tn < rn) {
            break;
        }
        x.swap_with_slice(&mut trial);
        r = tr;
        rn = tn;
    }
    rn
}
