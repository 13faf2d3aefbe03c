//! Seeded generators for small test networks.

use super::{Edge, Multiplex};

/// SplitMix64.
#[derive(Clone, Debug)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_u64() % (hi - lo + 1)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn edge(u: &str, v: &str, layer: &str, weight: f64) -> Edge {
    Edge {
        u: u.to_owned(),
        v: v.to_owned(),
        layer: layer.to_owned(),
        weight,
    }
}

/// Weight drawn either as an integer in 0..=20 or a real in [0, 20].
pub fn weight(rng: &mut Rng, integral: bool) -> f64 {
    if integral {
        rng.range(0, 20) as f64
    } else {
        rng.unit() * 20.0
    }
}

/// Random multiplex with up to `max_zones` zones and `max_layers` layers;
/// every (pair, layer) edge is present with probability `density`.
pub fn random(
    rng: &mut Rng,
    max_zones: usize,
    max_layers: usize,
    density: f64,
    integral: bool,
) -> Multiplex {
    let zones = names("z", rng.range(2, max_zones as u64) as usize);
    let layers = names("l", rng.range(1, max_layers as u64) as usize);
    let mut edges = Vec::new();
    for l in &layers {
        for (i, a) in zones.iter().enumerate() {
            for b in &zones[i + 1..] {
                if rng.chance(density) {
                    edges.push(edge(a, b, l, weight(rng, integral)));
                }
            }
        }
    }
    Multiplex::new(zones, layers, edges)
}

/// Every edge-presence pattern over `zones` zones and `layers` layers, each
/// present edge weighted by `weight`.
pub fn all_topologies(
    zones: usize,
    layers: usize,
    mut weight: impl FnMut() -> f64,
) -> Vec<Multiplex> {
    let zs = names("z", zones);
    let ls = names("l", layers);
    let mut slots = Vec::new();
    for l in &ls {
        for (i, a) in zs.iter().enumerate() {
            for b in &zs[i + 1..] {
                slots.push((a.clone(), b.clone(), l.clone()));
            }
        }
    }
    (0u64..1 << slots.len())
        .map(|mask| {
            let edges = slots
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, (a, b, l))| edge(a, b, l, weight()))
                .collect();
            Multiplex::new(zs.clone(), ls.clone(), edges)
        })
        .collect()
}

/// Two cliques on their own layers joined by a one-edge bridge layer, with
/// an optional extra layer over part of one clique.
pub fn bridge_family(rng: &mut Rng) -> Multiplex {
    let left = names("a", rng.range(4, 5) as usize);
    let right = names("b", rng.range(4, 5) as usize);
    let mut edges = Vec::new();
    for (side, layer) in [(&left, "left"), (&right, "right")] {
        for (i, a) in side.iter().enumerate() {
            for b in &side[i + 1..] {
                edges.push(edge(a, b, layer, rng.range(1, 20) as f64));
            }
        }
    }
    let mut layers = vec!["bridge".to_owned(), "left".to_owned(), "right".to_owned()];
    if rng.chance(0.5) {
        let side = if rng.chance(0.5) { &left } else { &right };
        let k = rng.range(2, 3) as usize;
        for (i, a) in side[..k].iter().enumerate() {
            for b in &side[i + 1..k] {
                edges.push(edge(a, b, "extra", rng.range(1, 20) as f64));
            }
        }
        layers.push("extra".to_owned());
    }
    let a = &left[rng.range(0, left.len() as u64 - 1) as usize];
    let b = &right[rng.range(0, right.len() as u64 - 1) as usize];
    edges.push(edge(a, b, "bridge", rng.range(1, 20) as f64));
    let zones = left.into_iter().chain(right).collect();
    Multiplex::new(zones, layers, edges)
}

/// A copy with every weight multiplied by `factor`.
pub fn scaled(net: &Multiplex, factor: f64) -> Multiplex {
    let mut out = net.clone();
    for e in &mut out.edges {
        e.weight *= factor;
    }
    out
}
