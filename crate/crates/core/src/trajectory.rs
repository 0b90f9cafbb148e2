// SPDX-License-Identifier: Apache-2.0
//! Trajectories: world states linked by partial maps, each with an agent.
//!
//! Snapshots are numbered from 1. Extending a trajectory shares the prefix,
//! so forks under branching effects are cheap.

use std::fmt;
use std::sync::Arc;

use crate::acset::ACSet;
use crate::morphism::ACSetMorphism;
use crate::partial::{PartialMap, PartialMapError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },
    #[error("agent codomain is not the expected world state")]
    Codomain,
    #[error("world state has a different schema")]
    Schema,
    #[error("world state is not ground")]
    NotGround,
    #[error(transparent)]
    Partial(#[from] PartialMapError),
}

#[derive(Clone, Debug, PartialEq)]
enum Link {
    Identity,
    Map(PartialMap),
}

#[derive(Debug)]
struct Node {
    prev: Option<Arc<Node>>,
    /// Map from the previous world into this one.
    link: Option<Link>,
    agent: ACSetMorphism,
    len: usize,
}

#[derive(Clone)]
pub struct Trajectory {
    head: Arc<Node>,
}

fn same(a: &Arc<ACSet>, b: &Arc<ACSet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl Trajectory {
    /// A one-snapshot trajectory.
    pub fn new(agent: ACSetMorphism) -> Result<Self, TrajectoryError> {
        if !agent.cod().is_ground() {
            return Err(TrajectoryError::NotGround);
        }
        Ok(Trajectory {
            head: Arc::new(Node {
                prev: None,
                link: None,
                agent,
                len: 1,
            }),
        })
    }

    /// A trajectory at `world` focused on the empty agent.
    pub fn start(world: &Arc<ACSet>) -> Result<Self, TrajectoryError> {
        Trajectory::new(ACSetMorphism::from_initial(world))
    }

    pub fn len(&self) -> usize {
        self.head.len
    }

    /// Always false; trajectories are nonempty.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> &Arc<ACSet> {
        self.head.agent.cod()
    }

    /// The current agent.
    pub fn agent(&self) -> &ACSetMorphism {
        &self.head.agent
    }

    fn node(&self, i: usize) -> Result<&Node, TrajectoryError> {
        if i == 0 || i > self.len() {
            return Err(TrajectoryError::Index {
                index: i,
                len: self.len(),
            });
        }
        let mut n: &Node = &self.head;
        while n.len > i {
            n = n.prev.as_deref().expect("length bookkeeping");
        }
        Ok(n)
    }

    /// The agent of snapshot `i` (1-based).
    pub fn get(&self, i: usize) -> Result<&ACSetMorphism, TrajectoryError> {
        Ok(&self.node(i)?.agent)
    }

    pub fn world(&self, i: usize) -> Result<&Arc<ACSet>, TrajectoryError> {
        Ok(self.node(i)?.agent.cod())
    }

    /// `f ; pm_{i+1} ; ... ; pm_n` if every part in the image of `f`
    /// survives to the last snapshot.
    pub fn postcompose(
        &self,
        f: &ACSetMorphism,
        i: usize,
    ) -> Result<Option<ACSetMorphism>, TrajectoryError> {
        let target = self.node(i)?;
        if !same(f.cod(), target.agent.cod()) {
            return Err(TrajectoryError::Codomain);
        }
        let mut links = Vec::new();
        let mut n: &Node = &self.head;
        while n.len > i {
            links.push(n.link.as_ref().expect("non-first node has a link"));
            n = n.prev.as_deref().expect("length bookkeeping");
        }
        let mut cur = f.clone();
        for link in links.into_iter().rev() {
            match link {
                Link::Identity => {}
                Link::Map(pm) => match pm.postcompose(&cur)? {
                    Some(g) => cur = g,
                    None => return Ok(None),
                },
            }
        }
        if !Arc::ptr_eq(cur.cod(), self.last()) {
            // Identity links may end on an equal copy; retarget to the
            // shared object.
            cur = ACSetMorphism::new_unchecked(
                Arc::clone(cur.dom()),
                Arc::clone(self.last()),
                cur.components().to_vec(),
                cur.var_assignment().clone(),
            );
        }
        Ok(Some(cur))
    }

    /// Appends `(last, b)` with an identity link.
    pub fn extend(&self, b: ACSetMorphism) -> Result<Trajectory, TrajectoryError> {
        if !same(b.cod(), self.last()) {
            return Err(TrajectoryError::Codomain);
        }
        Ok(self.push(Link::Identity, b))
    }

    /// Appends `(cod pm, agent)` linked by `pm`.
    pub fn extend_with(
        &self,
        pm: PartialMap,
        agent: ACSetMorphism,
    ) -> Result<Trajectory, TrajectoryError> {
        if !same(pm.dom(), self.last()) {
            return Err(TrajectoryError::Codomain);
        }
        if !same(agent.cod(), pm.cod()) {
            return Err(TrajectoryError::Codomain);
        }
        if !pm.cod().same_schema(self.last()) {
            return Err(TrajectoryError::Schema);
        }
        if !pm.cod().is_ground() {
            return Err(TrajectoryError::NotGround);
        }
        Ok(self.push(Link::Map(pm), agent))
    }

    fn push(&self, link: Link, agent: ACSetMorphism) -> Trajectory {
        Trajectory {
            head: Arc::new(Node {
                prev: Some(Arc::clone(&self.head)),
                link: Some(link),
                agent,
                len: self.len() + 1,
            }),
        }
    }

    /// Agents of every snapshot, oldest first.
    pub fn agents(&self) -> Vec<&ACSetMorphism> {
        let mut out = Vec::with_capacity(self.len());
        let mut n: Option<&Node> = Some(&self.head);
        while let Some(node) = n {
            out.push(&node.agent);
            n = node.prev.as_deref();
        }
        out.reverse();
        out
    }

    /// Whether snapshot `i` (2-based and up) is linked to its predecessor by
    /// an identity.
    pub fn is_identity_link(&self, i: usize) -> Result<bool, TrajectoryError> {
        Ok(matches!(self.node(i)?.link, Some(Link::Identity)))
    }
}

impl PartialEq for Trajectory {
    fn eq(&self, other: &Self) -> bool {
        let (mut a, mut b): (Option<&Node>, Option<&Node>) = (Some(&self.head), Some(&other.head));
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if std::ptr::eq(x, y) {
                        return true;
                    }
                    if x.len != y.len || x.agent != y.agent || x.link != y.link {
                        return false;
                    }
                    a = x.prev.as_deref();
                    b = y.prev.as_deref();
                }
                _ => return false,
            }
        }
    }
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("len", &self.len())
            .field("last_counts", &self.last().part_counts())
            .finish()
    }
}

impl Drop for Node {
    // Unlink iteratively so long trajectories do not overflow the stack.
    fn drop(&mut self) {
        let mut prev = self.prev.take();
        while let Some(node) = prev {
            match Arc::try_unwrap(node) {
                Ok(mut n) => prev = n.prev.take(),
                Err(_) => break,
            }
        }
    }
}
