use rand::Rng;

use crate::coding::field::{Elem, Field};

/// Coefficients of a coded piece over the `K` data pieces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodingVector(pub Vec<Elem>);

impl CodingVector {
    pub fn zero(k: usize) -> Self {
        CodingVector(vec![0; k])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Uniform over `F_q^K`.
    pub fn random<R: Rng + ?Sized>(k: usize, field: &Field, rng: &mut R) -> Self {
        let q = field.order();
        CodingVector((0..k).map(|_| rng.random_range(0..q) as Elem).collect())
    }
}

/// A subspace of `F_q^K` held in reduced row echelon form.
///
/// Rows have leading coefficient 1 in strictly increasing pivot columns and
/// every pivot column is zero in the other rows, so the representation is
/// canonical: equal subspaces compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    k: usize,
    rows: Vec<Vec<Elem>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(k: usize) -> Self {
        Self {
            k,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// All of `F_q^K`.
    pub fn full(k: usize) -> Self {
        let rows = (0..k)
            .map(|i| {
                let mut r = vec![0; k];
                r[i] = 1;
                r
            })
            .collect();
        Self {
            k,
            rows,
            pivots: (0..k).collect(),
        }
    }

    pub fn span<'a, I>(k: usize, field: &Field, vectors: I) -> Self
    where
        I: IntoIterator<Item = &'a CodingVector>,
    {
        let mut s = Self::zero(k);
        for v in vectors {
            s.insert(field, v);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<Elem>] {
        &self.rows
    }

    /// Subtracts multiples of the basis rows to clear every pivot column of `v`.
    fn reduce(&self, field: &Field, v: &mut [Elem]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = v[p];
            if c != 0 {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = field.sub(*x, field.mul(c, r));
                }
            }
        }
    }

    pub fn contains(&self, field: &Field, v: &CodingVector) -> bool {
        let mut w = v.0.clone();
        self.reduce(field, &mut w);
        w.iter().all(|&c| c == 0)
    }

    /// Adds `v` to the span. Returns whether the dimension grew.
    pub fn insert(&mut self, field: &Field, v: &CodingVector) -> bool {
        debug_assert_eq!(v.len(), self.k);
        let mut w = v.0.clone();
        self.reduce(field, &mut w);
        let Some(p) = w.iter().position(|&c| c != 0) else {
            return false;
        };
        let scale = field.inv(w[p]).expect("nonzero pivot");
        for x in &mut w {
            *x = field.mul(*x, scale);
        }
        for row in &mut self.rows {
            let c = row[p];
            if c != 0 {
                for (x, &r) in row.iter_mut().zip(&w) {
                    *x = field.sub(*x, field.mul(c, r));
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.rows.insert(at, w);
        self.pivots.insert(at, p);
        true
    }

    /// A uniform member, as a combination of the basis with independent
    /// uniform coefficients.
    pub fn random_vector<R: Rng + ?Sized>(&self, field: &Field, rng: &mut R) -> CodingVector {
        let q = field.order();
        let mut v = vec![0; self.k];
        for row in &self.rows {
            let c = rng.random_range(0..q) as Elem;
            if c != 0 {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = field.add(*x, field.mul(c, r));
                }
            }
        }
        CodingVector(v)
    }

    /// `self + other`.
    pub fn sum(&self, field: &Field, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for row in &other.rows {
            s.insert(field, &CodingVector(row.clone()));
        }
        s
    }

    /// `dim(self ∩ other)` via `dim A + dim B - dim(A + B)`.
    pub fn intersection_dim(&self, field: &Field, other: &Subspace) -> usize {
        self.dim() + other.dim() - self.sum(field, other).dim()
    }

    pub fn is_subspace_of(&self, field: &Field, other: &Subspace) -> bool {
        self.rows
            .iter()
            .all(|r| other.contains(field, &CodingVector(r.clone())))
    }

    /// Every member, for small `q^dim`.
    pub fn members(&self, field: &Field) -> Vec<CodingVector> {
        let q = field.order();
        let mut out = vec![CodingVector::zero(self.k)];
        for row in &self.rows {
            let mut next = Vec::with_capacity(out.len() * q);
            for v in &out {
                for c in 0..q as Elem {
                    let w =
                        v.0.iter()
                            .zip(row)
                            .map(|(&x, &r)| field.add(x, field.mul(c, r)))
                            .collect();
                    next.push(CodingVector(w));
                }
            }
            out = next;
        }
        out
    }
}

/// Probability that a uniform member of `vb` increases the dimension of `va`:
/// `1 - q^(dim(va ∩ vb) - dim vb)`, and 0 when `vb ⊆ va`.
pub fn useful_probability(field: &Field, va: &Subspace, vb: &Subspace) -> f64 {
    let inter = va.intersection_dim(field, vb);
    if inter == vb.dim() {
        return 0.0;
    }
    1.0 - (field.order() as f64).powi(inter as i32 - vb.dim() as i32)
}

/// Every subspace of `F_q^K`, by closing the zero space under insertion.
/// Intended for small `q^K`.
pub fn all_subspaces(field: &Field, k: usize) -> Vec<Subspace> {
    let vectors = Subspace::full(k).members(field);
    let mut found = vec![Subspace::zero(k)];
    let mut seen: std::collections::HashSet<Subspace> = found.iter().cloned().collect();
    let mut frontier = found.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for s in &frontier {
            for v in &vectors {
                let mut t = s.clone();
                if t.insert(field, v) && seen.insert(t.clone()) {
                    next.push(t);
                }
            }
        }
        found.extend(next.iter().cloned());
        frontier = next;
    }
    found
}
