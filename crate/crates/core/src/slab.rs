//! Per-slice storage that keeps fiber-constant slices as a single value.

#[derive(Debug, Clone, PartialEq)]
pub enum Slab<T> {
    Uniform(T),
    Dense(Vec<T>),
}

impl<T: Copy> Slab<T> {
    pub fn at(&self, i: usize) -> T {
        match self {
            Slab::Uniform(v) => *v,
            Slab::Dense(d) => d[i],
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Slab::Uniform(_))
    }

    pub fn to_vec(&self, n: usize) -> Vec<T> {
        match self {
            Slab::Uniform(v) => vec![*v; n],
            Slab::Dense(d) => d.clone(),
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Slab<U> {
        match self {
            Slab::Uniform(v) => Slab::Uniform(f(*v)),
            Slab::Dense(d) => Slab::Dense(d.iter().map(|&v| f(v)).collect()),
        }
    }

    pub fn zip_with<U: Copy, V: Copy>(&self, other: &Slab<U>, f: impl Fn(T, U) -> V) -> Slab<V> {
        match (self, other) {
            (Slab::Uniform(a), Slab::Uniform(b)) => Slab::Uniform(f(*a, *b)),
            (Slab::Dense(a), Slab::Uniform(b)) => Slab::Dense(a.iter().map(|&x| f(x, *b)).collect()),
            (Slab::Uniform(a), Slab::Dense(b)) => Slab::Dense(b.iter().map(|&y| f(*a, y)).collect()),
            (Slab::Dense(a), Slab::Dense(b)) => Slab::Dense(a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()),
        }
    }

    pub fn zip3<U: Copy, W: Copy, V: Copy>(&self, b: &Slab<U>, c: &Slab<W>, f: impl Fn(T, U, W) -> V) -> Slab<V> {
        if let (Slab::Uniform(x), Slab::Uniform(y), Slab::Uniform(z)) = (self, b, c) {
            return Slab::Uniform(f(*x, *y, *z));
        }
        let n = [self.len_hint(), b.len_hint(), c.len_hint()].into_iter().flatten().next().unwrap_or(0);
        Slab::Dense((0..n).map(|i| f(self.at(i), b.at(i), c.at(i))).collect())
    }

    pub fn len_hint(&self) -> Option<usize> {
        match self {
            Slab::Uniform(_) => None,
            Slab::Dense(d) => Some(d.len()),
        }
    }

    /// Index remap of a dense slab; uniform slabs are unchanged.
    pub fn permuted(&self, map: &[usize]) -> Slab<T> {
        match self {
            Slab::Uniform(v) => Slab::Uniform(*v),
            Slab::Dense(d) => Slab::Dense(map.iter().map(|&j| d[j]).collect()),
        }
    }
}

impl<T: Copy + PartialEq> Slab<T> {
    /// Collapse a dense slab whose entries are bitwise identical.
    pub fn compressed(self) -> Self {
        match self {
            Slab::Dense(d) if !d.is_empty() && d.iter().all(|v| *v == d[0]) => Slab::Uniform(d[0]),
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_arithmetic_stays_uniform() {
        let a = Slab::Uniform(2.0);
        let b = Slab::Uniform(3.0);
        assert_eq!(a.zip_with(&b, |x, y| x * y), Slab::Uniform(6.0));
        let d = Slab::Dense(vec![1.0, 2.0]);
        assert_eq!(a.zip_with(&d, |x, y| x + y), Slab::Dense(vec![3.0, 4.0]));
        assert_eq!(Slab::Dense(vec![5.0, 5.0]).compressed(), Slab::Uniform(5.0));
        assert_eq!(d.permuted(&[1, 0]), Slab::Dense(vec![2.0, 1.0]));
        assert_eq!(a.zip3(&d, &b, |x, y, z| x + y + z), Slab::Dense(vec![6.0, 7.0]));
    }
}
