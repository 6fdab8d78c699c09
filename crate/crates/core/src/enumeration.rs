//! Counting, exhaustive enumeration and uniform sampling of formulae of a
//! fixed size.
//!
//! Enumeration order for size `n`:
//! 1. leaves (variables in list order, then `false`), only at `n == 1`;
//! 2. `!ψ` for every `ψ` of size `n - 1`, in enumeration order;
//! 3. for each left size `i = 1..=n-2` ascending, for each connective in
//!    space order, for each left `ψ₁` of size `i`, for each right `ψ₂` of
//!    size `n - 1 - i`: `ψ₁ c ψ₂`.
//!
//! The rank of a formula in this order is what [`unrank`] decodes, so the
//! sampler and the enumerator agree on the support.

use std::sync::{Arc, OnceLock};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::SpaceError;
use crate::formula::{Connective, Formula};

/// Sizes whose formula count is at most this many are kept in memory while
/// enumerating larger sizes.
const CACHE_LIMIT: u64 = 250_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaSpace {
    vars: Vec<Arc<str>>,
    conns: Vec<Connective>,
    allow_not: bool,
    allow_false: bool,
}

impl FormulaSpace {
    /// A space with unary negation enabled and the constant disabled.
    pub fn new<I, S>(vars: I, conns: &[Connective]) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Arc<str>>,
    {
        let mut uniq = Vec::new();
        for c in conns {
            if !uniq.contains(c) {
                uniq.push(*c);
            }
        }
        FormulaSpace {
            vars: vars.into_iter().map(Into::into).collect(),
            conns: uniq,
            allow_not: true,
            allow_false: false,
        }
    }

    pub fn with_not(mut self, allow: bool) -> Self {
        self.allow_not = allow;
        self
    }

    pub fn with_false(mut self, allow: bool) -> Self {
        self.allow_false = allow;
        self
    }

    pub fn vars(&self) -> &[Arc<str>] {
        &self.vars
    }

    pub fn connectives(&self) -> &[Connective] {
        &self.conns
    }

    pub fn allows_not(&self) -> bool {
        self.allow_not
    }

    pub fn allows_false(&self) -> bool {
        self.allow_false
    }

    pub fn num_leaves(&self) -> usize {
        self.vars.len() + usize::from(self.allow_false)
    }

    fn leaves(&self) -> impl Iterator<Item = Formula> + '_ {
        self.vars
            .iter()
            .map(|v| Formula::Var(v.clone()))
            .chain(self.allow_false.then_some(Formula::False))
    }

    fn leaf(&self, index: usize) -> Formula {
        match self.vars.get(index) {
            Some(v) => Formula::Var(v.clone()),
            None => Formula::False,
        }
    }

    fn validate(&self) -> Result<(), SpaceError> {
        if self.num_leaves() == 0 {
            Err(SpaceError::NoLeaves)
        } else {
            Ok(())
        }
    }
}

/// Exact formula counts per size, extended on demand.
#[derive(Clone, Debug)]
pub struct CountTable {
    leaves: BigUint,
    conns: BigUint,
    allow_not: bool,
    counts: Vec<BigUint>,
}

impl CountTable {
    pub fn new(space: &FormulaSpace) -> Self {
        CountTable {
            leaves: BigUint::from(space.num_leaves()),
            conns: BigUint::from(space.conns.len()),
            allow_not: space.allow_not,
            counts: vec![BigUint::zero()],
        }
    }

    pub fn up_to(space: &FormulaSpace, max: usize) -> Self {
        let mut table = Self::new(space);
        table.extend_to(max);
        table
    }

    pub fn extend_to(&mut self, max: usize) {
        while self.counts.len() <= max {
            let n = self.counts.len();
            let value = if n == 1 {
                self.leaves.clone()
            } else {
                let mut bin = BigUint::zero();
                for i in 1..n - 1 {
                    bin += &self.counts[i] * &self.counts[n - 1 - i];
                }
                let mut total = &self.conns * bin;
                if self.allow_not {
                    total += &self.counts[n - 1];
                }
                total
            };
            self.counts.push(value);
        }
    }

    /// Count at size `n`; panics if the table was not extended that far.
    pub fn get(&self, n: usize) -> &BigUint {
        &self.counts[n]
    }

    pub fn max_size(&self) -> usize {
        self.counts.len() - 1
    }
}

pub fn count(space: &FormulaSpace, n: usize) -> BigUint {
    if n == 0 {
        return BigUint::zero();
    }
    CountTable::up_to(space, n).get(n).clone()
}

/// Shared state for enumerating one space: counts plus materialised
/// formula lists for the small sizes.
type Shared = Arc<[Arc<Formula>]>;

pub struct Enumerator {
    space: FormulaSpace,
    counts: CountTable,
    /// Filled on first use; `None` slots are streamed every time.
    cache: Vec<Option<OnceLock<Shared>>>,
}

impl Enumerator {
    /// Prepares enumeration of any size up to `max_size`.
    pub fn new(space: FormulaSpace, max_size: usize) -> Arc<Self> {
        let counts = CountTable::up_to(&space, max_size.max(1));
        // Only strictly smaller sizes are ever re-iterated.
        let cache = (0..max_size.max(1))
            .map(|n| {
                let fits = n > 0 && counts.get(n).to_u64().is_some_and(|c| c <= CACHE_LIMIT);
                fits.then(OnceLock::new)
            })
            .collect();
        Arc::new(Enumerator { space, counts, cache })
    }

    pub fn space(&self) -> &FormulaSpace {
        &self.space
    }

    pub fn count(&self, n: usize) -> &BigUint {
        self.counts.get(n)
    }

    /// All formulae of size `n` in enumeration order.
    pub fn iter(self: &Arc<Self>, n: usize) -> impl Iterator<Item = Formula> + Send + 'static {
        self.iter_shared(n).map(Arc::unwrap_or_clone)
    }

    fn iter_shared(self: &Arc<Self>, n: usize) -> Box<dyn Iterator<Item = Arc<Formula>> + Send> {
        if n == 0 || n > self.counts.max_size() {
            return Box::new(std::iter::empty());
        }
        if let Some(Some(slot)) = self.cache.get(n) {
            let list = slot.get_or_init(|| self.generate(n).collect()).clone();
            return Box::new((0..list.len()).map(move |i| list[i].clone()));
        }
        self.generate(n)
    }

    fn generate(self: &Arc<Self>, n: usize) -> Box<dyn Iterator<Item = Arc<Formula>> + Send> {
        if n == 1 {
            let leaves: Vec<_> = self.space.leaves().map(Arc::new).collect();
            return Box::new(leaves.into_iter());
        }
        let nots: Box<dyn Iterator<Item = Arc<Formula>> + Send> = if self.space.allow_not {
            Box::new(self.iter_shared(n - 1).map(|c| Arc::new(Formula::Not(c))))
        } else {
            Box::new(std::iter::empty())
        };
        let me = self.clone();
        let bins = (1..n - 1).flat_map(move |i| {
            let me = me.clone();
            let conns = me.space.conns.clone();
            conns.into_iter().flat_map(move |c| {
                let me = me.clone();
                me.iter_shared(i).flat_map(move |left| {
                    me.iter_shared(n - 1 - i)
                        .map(move |right| Arc::new(Formula::Bin(c, left.clone(), right)))
                })
            })
        });
        Box::new(nots.chain(bins))
    }
}

/// Streams every formula of size `n` exactly once.
pub fn enumerate(space: &FormulaSpace, n: usize) -> impl Iterator<Item = Formula> + Send + 'static {
    Enumerator::new(space.clone(), n).iter(n)
}

/// The formula at position `rank` of the size-`n` enumeration order.
pub fn unrank(space: &FormulaSpace, counts: &CountTable, n: usize, rank: &BigUint) -> Formula {
    debug_assert!(rank < counts.get(n));
    if n == 1 {
        return space.leaf(rank.to_usize().expect("leaf rank fits usize"));
    }
    let mut r = rank.clone();
    if space.allow_not {
        let sub = counts.get(n - 1);
        if &r < sub {
            return Formula::not(unrank(space, counts, n - 1, &r));
        }
        r -= sub;
    }
    for i in 1..n - 1 {
        let right = counts.get(n - 1 - i);
        let block = counts.get(i) * right;
        for &c in &space.conns {
            if r < block {
                let l = &r / right;
                let rr = &r % right;
                return Formula::bin(
                    c,
                    unrank(space, counts, i, &l),
                    unrank(space, counts, n - 1 - i, &rr),
                );
            }
            r -= &block;
        }
    }
    unreachable!("rank exceeds the formula count")
}

/// Draws formulae of one size uniformly at random.
#[derive(Clone, Debug)]
pub struct Sampler {
    space: FormulaSpace,
    counts: CountTable,
    size: usize,
}

impl Sampler {
    pub fn new(space: FormulaSpace, size: usize) -> Result<Self, SpaceError> {
        if size == 0 {
            return Err(SpaceError::ZeroSize);
        }
        space.validate()?;
        let counts = CountTable::up_to(&space, size);
        if counts.get(size).is_zero() {
            return Err(SpaceError::Empty(size));
        }
        Ok(Sampler {
            space,
            counts,
            size,
        })
    }

    pub fn support(&self) -> &BigUint {
        self.counts.get(self.size)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Formula {
        let rank = rng.gen_biguint_below(self.counts.get(self.size));
        unrank(&self.space, &self.counts, self.size, &rank)
    }
}

pub fn sample_uniform<R: Rng + ?Sized>(
    space: &FormulaSpace,
    n: usize,
    rng: &mut R,
) -> Result<Formula, SpaceError> {
    Ok(Sampler::new(space.clone(), n)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use Connective::*;

    fn space(vars: &[&str], conns: &[Connective]) -> FormulaSpace {
        FormulaSpace::new(vars.iter().copied(), conns)
    }

    #[test]
    fn count_examples() {
        let s = space(&["p", "q"], &[And, Or]).with_not(false);
        assert_eq!(count(&s, 5), BigUint::from(64u32));
        let s = space(&["p"], &[And]);
        assert_eq!(count(&s, 2), BigUint::from(1u32));
        let s = space(&["p"], &[And, Or, Implies]);
        assert_eq!(count(&s, 3), BigUint::from(4u32));
        assert_eq!(count(&s, 0), BigUint::zero());
    }

    #[test]
    fn count_includes_false_leaf() {
        let s = space(&["p", "q"], &[And]).with_false(true);
        assert_eq!(count(&s, 1), BigUint::from(3u32));
        assert_eq!(count(&s, 2), BigUint::from(3u32));
        assert_eq!(count(&s, 3), BigUint::from(3u32 + 9));
    }

    #[test]
    fn enumerate_examples() {
        let s = space(&["p"], &[And]).with_not(false);
        let got: Vec<String> = enumerate(&s, 1).map(|f| f.to_string()).collect();
        assert_eq!(got, ["p"]);
        let got: Vec<String> = enumerate(&s, 3).map(|f| f.to_string()).collect();
        assert_eq!(got, ["p & p"]);
        assert_eq!(enumerate(&s, 2).count(), 0);
    }

    #[test]
    fn enumeration_order_is_documented_order() {
        let s = space(&["p", "q"], &[And, Or]).with_false(true);
        let got: Vec<String> = enumerate(&s, 1).map(|f| f.to_string()).collect();
        assert_eq!(got, ["p", "q", "false"]);
        let got: Vec<String> = enumerate(&s, 3).take(6).map(|f| f.to_string()).collect();
        assert_eq!(got, ["!!p", "!!q", "!!false", "p & p", "p & q", "p & false"]);
    }

    #[test]
    fn enumerate_matches_count_and_has_no_duplicates() {
        let s = space(&["p", "q"], &[And, Or, Implies]).with_false(true);
        for n in 1..=7 {
            let all: Vec<Formula> = enumerate(&s, n).collect();
            assert_eq!(BigUint::from(all.len()), count(&s, n), "size {n}");
            let set: HashSet<&Formula> = all.iter().collect();
            assert_eq!(set.len(), all.len(), "duplicates at size {n}");
            assert!(all.iter().all(|f| f.size() == n));
        }
    }

    #[test]
    fn unrank_follows_enumeration_order() {
        let s = space(&["p", "q"], &[And, Or]);
        let counts = CountTable::up_to(&s, 6);
        for n in 1..=6 {
            for (rank, f) in enumerate(&s, n).enumerate() {
                assert_eq!(unrank(&s, &counts, n, &BigUint::from(rank)), f);
            }
        }
    }

    #[test]
    fn sampler_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = space(&["p"], &[And, Or]);
        for _ in 0..10 {
            assert_eq!(sample_uniform(&s, 1, &mut rng).unwrap(), Formula::var("p"));
        }
        let no_not = s.clone().with_not(false);
        assert_eq!(sample_uniform(&no_not, 2, &mut rng), Err(SpaceError::Empty(2)));
        assert_eq!(sample_uniform(&s, 0, &mut rng), Err(SpaceError::ZeroSize));
        let empty = FormulaSpace::new(Vec::<String>::new(), &[And]);
        assert_eq!(sample_uniform(&empty, 3, &mut rng), Err(SpaceError::NoLeaves));
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let s = space(&["p", "q", "r"], &[And, Or]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sampler = Sampler::new(s.clone(), 11).unwrap();
            (0..20).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }
}
