//! d-separation by reachability (the "Bayes ball" formulation), with every
//! bidirected edge treated as a latent fork that is never conditioned on.

use std::collections::BTreeSet;

use super::{CausalDiagram, Variable};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Dir {
    /// Arrived against an edge, i.e. from a child.
    Up,
    /// Arrived along an arrowhead, from a parent or a latent fork.
    Down,
}

pub(super) fn separated(g: &CausalDiagram, a: &BTreeSet<Variable>, b: &BTreeSet<Variable>, z: &BTreeSet<Variable>) -> bool {
    let z_anc = g.ancestors(z).expect("checked by caller");
    let mut visited: BTreeSet<(&Variable, Dir)> = BTreeSet::new();
    let mut stack: Vec<(&Variable, Dir)> = a.iter().map(|v| (v, Dir::Up)).collect();

    while let Some((v, dir)) = stack.pop() {
        if !visited.insert((v, dir)) {
            continue;
        }
        let observed = z.contains(v);
        if !observed && b.contains(v) {
            return false;
        }
        let mut go_up = false;
        let mut go_down = false;
        match dir {
            Dir::Up if !observed => {
                go_up = true;
                go_down = true;
            }
            Dir::Up => {}
            Dir::Down => {
                go_down = !observed;
                // v is a collider here; open iff v or a descendant is observed
                go_up = z_anc.contains(v);
            }
        }
        if go_up {
            stack.extend(g.parents(v).map(|p| (p, Dir::Up)));
            // through the latent parent and down into the spouse
            stack.extend(g.spouses(v).map(|s| (s, Dir::Down)));
        }
        if go_down {
            stack.extend(g.children(v).map(|c| (c, Dir::Down)));
        }
    }
    true
}
