//! Bounded league of frozen policy groups, kept sorted by win rate.

use rand::Rng;

use crate::error::{Error, Result};
use crate::league::combination::MixedCombination;
use crate::policy::{GroupId, PolicyGroup, WinRecord};

/// What the league needs to know about a stored group.
pub trait LeagueMember {
    fn id(&self) -> GroupId;
    fn record(&self) -> &WinRecord;
    fn record_mut(&mut self) -> &mut WinRecord;

    /// Win rate used for ordering; groups without games rank as 0.
    fn beta(&self) -> f64 {
        self.record().win_rate().unwrap_or(0.0)
    }
}

impl LeagueMember for PolicyGroup {
    fn id(&self) -> GroupId {
        self.group_id
    }

    fn record(&self) -> &WinRecord {
        &self.perf
    }

    fn record_mut(&mut self) -> &mut WinRecord {
        &mut self.perf
    }
}

/// Result of offering a candidate to the league.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpdateReport {
    pub candidate: GroupId,
    pub admitted: bool,
    /// Set when the league overflowed; may equal `candidate`.
    pub evicted: Option<GroupId>,
}

impl UpdateReport {
    /// True when the candidate is in the league after the update.
    pub fn retained(&self) -> bool {
        self.admitted && self.evicted != Some(self.candidate)
    }
}

#[derive(Clone, Debug)]
pub struct League<G = PolicyGroup> {
    members: Vec<G>,
    capacity: usize,
}

/// Indices `(p, q)`, `p < q`, of the adjacent pair in `betas` with the
/// smallest absolute difference. `betas` must be sorted; ties go to the pair
/// nearest the head.
pub fn closest_adjacent_pair(betas: &[f64]) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for i in 0..betas.len().saturating_sub(1) {
        let gap = (betas[i] - betas[i + 1]).abs();
        if best.map_or(true, |(g, _)| gap < g) {
            best = Some((gap, i));
        }
    }
    best.map(|(_, i)| (i, i + 1))
}

impl<G: LeagueMember> League<G> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("league capacity must be at least 1".into()));
        }
        Ok(Self {
            members: Vec::new(),
            capacity,
        })
    }

    /// Rebuilds a league from stored members, restoring the sort order.
    pub fn from_members(capacity: usize, members: Vec<G>) -> Result<Self> {
        let mut l = Self::new(capacity)?;
        if members.len() > capacity {
            return Err(Error::Config(format!("{} members exceed capacity {capacity}", members.len())));
        }
        l.members = members;
        l.sort();
        Ok(l)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.capacity
    }

    /// Members in descending win-rate order.
    pub fn members(&self) -> &[G] {
        &self.members
    }

    pub fn get(&self, id: GroupId) -> Option<&G> {
        self.members.iter().find(|m| m.id() == id)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.members.iter().map(LeagueMember::beta).collect()
    }

    pub fn min_beta(&self) -> Option<f64> {
        self.members.last().map(LeagueMember::beta)
    }

    /// Descending β, then ascending id.
    fn sort(&mut self) {
        self.members
            .sort_by(|a, b| b.beta().total_cmp(&a.beta()).then(a.id().cmp(&b.id())));
    }

    /// Draws the combination for one episode. With probability `p_pure`, or
    /// whenever the league is empty, every type runs the frontier; otherwise
    /// a member and a replaced type are drawn uniformly.
    pub fn sample_combination(&self, num_types: usize, rng: &mut impl Rng, p_pure: f64) -> MixedCombination {
        let u: f64 = rng.gen();
        if self.members.is_empty() || num_types == 0 || u < p_pure {
            return MixedCombination::pure();
        }
        let k = rng.gen_range(0..self.members.len());
        let d = rng.gen_range(0..num_types);
        MixedCombination::mixed(k, self.members[k].id(), d)
    }

    /// Gate for a seeded candidate: always open while the league has room;
    /// once full, the candidate needs at least one win and a win rate
    /// strictly above the weakest member.
    pub fn passes_gate(&self, candidate: &G) -> bool {
        if !self.is_full() {
            return true;
        }
        candidate.record().wins > 0.0 && self.min_beta().map_or(true, |m| candidate.beta() > m)
    }

    /// Adds `candidate`; when that overflows the capacity, removes the newer
    /// group of the closest-β adjacent pair. Returns the evicted member.
    pub fn insert(&mut self, candidate: G) -> Option<G> {
        self.members.push(candidate);
        self.sort();
        if self.members.len() <= self.capacity {
            return None;
        }
        let (p, q) = closest_adjacent_pair(&self.betas()).expect("at least two members");
        let newer = if self.members[p].id() > self.members[q].id() { p } else { q };
        Some(self.members.remove(newer))
    }

    /// Gate then insert. The returned report names any evicted group;
    /// rejected or evicted candidates are dropped.
    pub fn offer(&mut self, candidate: G) -> (UpdateReport, Option<G>) {
        let id = candidate.id();
        if !self.passes_gate(&candidate) {
            return (
                UpdateReport {
                    candidate: id,
                    admitted: false,
                    evicted: None,
                },
                None,
            );
        }
        let evicted = self.insert(candidate);
        (
            UpdateReport {
                candidate: id,
                admitted: true,
                evicted: evicted.as_ref().map(LeagueMember::id),
            },
            evicted,
        )
    }

    /// Adds a game result to a member's own record and restores the order.
    pub fn record_member(&mut self, id: GroupId, won: bool) -> Result<()> {
        let m = self
            .members
            .iter_mut()
            .find(|m| m.id() == id)
            .ok_or_else(|| Error::Contract(format!("group {id} is not in the league")))?;
        m.record_mut().record(won);
        self.sort();
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Clone, Debug, PartialEq)]
    pub(crate) struct Stub {
        pub id: GroupId,
        pub rec: WinRecord,
    }

    impl Stub {
        pub fn new(id: GroupId, wins: f64, games: f64) -> Self {
            Self {
                id,
                rec: WinRecord { wins, games },
            }
        }
    }

    impl LeagueMember for Stub {
        fn id(&self) -> GroupId {
            self.id
        }
        fn record(&self) -> &WinRecord {
            &self.rec
        }
        fn record_mut(&mut self) -> &mut WinRecord {
            &mut self.rec
        }
    }

    #[test]
    fn overflow_evicts_newer_of_closest_pair() {
        // Members at 0.10 (id 1), 0.45 (id 2), 0.90 (id 3); candidate id 4 at 0.50.
        let mut l = League::new(3).unwrap();
        for s in [Stub::new(1, 10.0, 100.0), Stub::new(2, 45.0, 100.0), Stub::new(3, 90.0, 100.0)] {
            assert!(l.insert(s).is_none());
        }
        let evicted = l.insert(Stub::new(4, 50.0, 100.0)).unwrap();
        assert_eq!(evicted.id, 4);
        assert_eq!(l.members().iter().map(|m| m.id).collect::<Vec<_>>(), vec![3, 2, 1]);
    }

    #[test]
    fn older_member_of_pair_survives() {
        // Same βs, but the 0.50 group is older than the 0.45 group.
        let mut l = League::new(3).unwrap();
        for s in [Stub::new(1, 10.0, 100.0), Stub::new(5, 45.0, 100.0), Stub::new(3, 90.0, 100.0)] {
            l.insert(s);
        }
        let evicted = l.insert(Stub::new(2, 50.0, 100.0)).unwrap();
        assert_eq!(evicted.id, 5);
    }

    #[test]
    fn empty_league_admits() {
        let mut l: League<Stub> = League::new(2).unwrap();
        let (r, _) = l.offer(Stub::new(1, 0.0, 32.0));
        assert!(r.admitted && r.retained());
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn full_league_gate() {
        let mut l = League::new(2).unwrap();
        l.insert(Stub::new(1, 3.0, 10.0));
        l.insert(Stub::new(2, 5.0, 10.0));
        assert!(!l.passes_gate(&Stub::new(3, 0.0, 10.0)));
        assert!(!l.passes_gate(&Stub::new(3, 3.0, 10.0)));
        assert!(l.passes_gate(&Stub::new(3, 4.0, 10.0)));
        let (r, _) = l.offer(Stub::new(3, 0.0, 10.0));
        assert!(!r.admitted);
        assert_eq!(l.len(), 2);
    }

    #[test]
    fn ties_prefer_pair_nearest_head() {
        assert_eq!(closest_adjacent_pair(&[0.9, 0.8, 0.5, 0.4]), Some((0, 1)));
        assert_eq!(closest_adjacent_pair(&[0.5]), None);
    }

    #[test]
    fn sampling_empty_or_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty: League<Stub> = League::new(3).unwrap();
        let mut full = League::new(3).unwrap();
        full.insert(Stub::new(1, 1.0, 2.0));
        for _ in 0..200 {
            assert!(empty.sample_combination(3, &mut rng, 0.0).is_pure());
            assert!(full.sample_combination(3, &mut rng, 1.0).is_pure());
            assert!(!full.sample_combination(3, &mut rng, 0.0).is_pure());
        }
    }

    #[test]
    fn member_record_resorts() {
        let mut l = League::new(3).unwrap();
        l.insert(Stub::new(1, 1.0, 2.0));
        l.insert(Stub::new(2, 0.0, 2.0));
        for _ in 0..3 {
            l.record_member(2, true).unwrap();
        }
        assert_eq!(l.members()[0].id, 2);
        assert!(l.record_member(9, true).is_err());
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(League::<Stub>::new(0).is_err());
    }
}
