/// Union-find over grid indices with path halving and union by size.
#[derive(Clone, Debug)]
pub(crate) struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(len: usize) -> Self {
        Self { parent: (0..len as u32).collect(), size: vec![1; len] }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] as usize != i {
            let gp = self.parent[self.parent[i] as usize];
            self.parent[i] = gp;
            i = gp as usize;
        }
        i
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
    }
}

/// A partition of `0..n` into classes numbered by first occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    class_of: Vec<u32>,
    offsets: Vec<u32>,
    members: Vec<u32>,
}

impl Partition {
    pub(crate) fn from_sets(mut sets: DisjointSets, n: usize) -> Self {
        let mut id_of_root = vec![u32::MAX; n];
        let mut class_of = Vec::with_capacity(n);
        let mut count = 0u32;
        for i in 0..n {
            let root = sets.find(i);
            if id_of_root[root] == u32::MAX {
                id_of_root[root] = count;
                count += 1;
            }
            class_of.push(id_of_root[root]);
        }
        Self::from_labels(class_of, count as usize)
    }

    /// Builds from per-index class labels already numbered `0..count` by first occurrence.
    pub(crate) fn from_labels(class_of: Vec<u32>, count: usize) -> Self {
        let mut offsets = vec![0u32; count + 1];
        for &c in &class_of {
            offsets[c as usize + 1] += 1;
        }
        for k in 0..count {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut members = vec![0u32; class_of.len()];
        for (i, &c) in class_of.iter().enumerate() {
            members[fill[c as usize] as usize] = i as u32;
            fill[c as usize] += 1;
        }
        Self { class_of, offsets, members }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.class_of
    }

    /// Sorted grid indices of class `c`.
    #[inline]
    pub fn members(&self, c: usize) -> &[u32] {
        &self.members[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }

    pub fn same(&self, i: usize, j: usize) -> bool {
        self.class_of[i] == self.class_of[j]
    }
}
