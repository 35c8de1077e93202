/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parents: Vec<u32>,
    sizes: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self {
            parents: (0..len as u32).collect(),
            sizes: vec![1; len],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// Resets to singletons without reallocating.
    pub fn reset(&mut self) {
        for (i, p) in self.parents.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.sizes.fill(1);
    }

    pub fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parents[root] as usize != root {
            root = self.parents[root] as usize;
        }
        let mut cur = i;
        while cur != root {
            let next = self.parents[cur] as usize;
            self.parents[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Returns true if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return false;
        }
        if self.sizes[ra] < self.sizes[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parents[rb] = ra as u32;
        self.sizes[ra] += self.sizes[rb];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Size of the set containing `i`.
    pub fn set_size(&mut self, i: usize) -> usize {
        let r = self.find(i);
        self.sizes[r] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_and_find() {
        let mut uf = UnionFind::new(6);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(!uf.union(1, 0));
        assert!(uf.same(0, 1));
        assert!(!uf.same(1, 2));
        uf.union(1, 3);
        assert!(uf.same(0, 2));
        assert_eq!(uf.set_size(3), 4);
        uf.reset();
        assert!(!uf.same(0, 1));
        assert_eq!(uf.set_size(0), 1);
    }
}
