use std::fmt;

/// Largest supported user count. Coding coefficients live in GF(2^8), and
/// the scheme needs a field larger than the number of users.
pub const MAX_USERS: usize = 16;

/// A subset of users `[K]` as a bitmask; bit `k` is user `k` (0-based).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserSet(pub u32);

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    pub fn full(k: usize) -> UserSet {
        debug_assert!(k <= MAX_USERS);
        UserSet(((1u64 << k) - 1) as u32)
    }

    pub fn singleton(user: usize) -> UserSet {
        UserSet(1 << user)
    }

    pub fn from_users<I: IntoIterator<Item = usize>>(users: I) -> UserSet {
        UserSet(users.into_iter().fold(0, |m, u| m | (1 << u)))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn contains(self, user: usize) -> bool {
        self.0 >> user & 1 == 1
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn with(self, user: usize) -> UserSet {
        UserSet(self.0 | 1 << user)
    }

    #[inline]
    pub fn without(self, user: usize) -> UserSet {
        UserSet(self.0 & !(1 << user))
    }

    #[inline]
    pub fn union(self, other: UserSet) -> UserSet {
        UserSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: UserSet) -> UserSet {
        UserSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: UserSet) -> UserSet {
        UserSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: UserSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(u)
        })
    }

    /// All subsets of `[k]` with exactly `size` members, ascending by bitmask.
    pub fn subsets_of_size(k: usize, size: usize) -> impl Iterator<Item = UserSet> {
        (0u32..(1u32 << k))
            .filter(move |m| m.count_ones() as usize == size)
            .map(UserSet)
    }

    /// All subsets of `[k]`, ascending by bitmask (empty set first).
    pub fn all_subsets(k: usize) -> impl Iterator<Item = UserSet> {
        (0u32..(1u32 << k)).map(UserSet)
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Prints 1-based user labels, e.g. `{1,3}`.
impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, u) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", u + 1)?;
        }
        write!(f, "}}")
    }
}
