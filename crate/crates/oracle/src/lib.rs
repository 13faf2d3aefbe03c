//! Literal, slow reference implementation of the multiplex metrics and of
//! weakest-first percolation, over plain string edge lists.
//!
//! Every quantity is recomputed from the edge list on each call: no caching,
//! no indexing, no shortcuts. Intended only as a test oracle on tiny inputs.

pub mod gen;

use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub layer: String,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Config {
    /// Divide each layer weight by the pair's total weight across layers.
    pub share: bool,
    pub epsilon: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            share: false,
            epsilon: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Multiplex {
    pub zones: Vec<String>,
    pub layers: Vec<String>,
    pub edges: Vec<Edge>,
}

/// `(fraction removed, relative giant size)` samples.
pub type Curve = Vec<(f64, f64)>;

/// Canonical `(u, v, layer)` triples in removal order.
pub type RemovalLog = Vec<(String, String, String)>;

/// Two scores are treated as equal within this relative tolerance.
const TIE: f64 = 1e-9;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE * a.abs().max(b.abs())
}

fn joins(e: &Edge, a: &str, b: &str) -> bool {
    (e.u == a && e.v == b) || (e.u == b && e.v == a)
}

fn other<'a>(e: &'a Edge, x: &str) -> Option<&'a str> {
    if e.u == x {
        Some(&e.v)
    } else if e.v == x {
        Some(&e.u)
    } else {
        None
    }
}

impl Multiplex {
    pub fn new(mut zones: Vec<String>, mut layers: Vec<String>, edges: Vec<Edge>) -> Self {
        zones.sort();
        zones.dedup();
        layers.sort();
        layers.dedup();
        Multiplex {
            zones,
            layers,
            edges,
        }
    }

    /// Γ_l(x).
    pub fn neighbours(&self, x: &str, layer: &str) -> BTreeSet<String> {
        self.edges
            .iter()
            .filter(|e| e.layer == layer)
            .filter_map(|e| other(e, x))
            .map(str::to_owned)
            .collect()
    }

    /// Neighbours of `x` on any layer.
    pub fn all_neighbours(&self, x: &str) -> BTreeSet<String> {
        self.edges
            .iter()
            .filter_map(|e| other(e, x))
            .map(str::to_owned)
            .collect()
    }

    pub fn edge(&self, a: &str, b: &str, layer: &str) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| e.layer == layer && joins(e, a, b))
    }

    /// Layers carrying an `a`–`b` edge.
    pub fn pair_layers(&self, a: &str, b: &str) -> BTreeSet<String> {
        self.edges
            .iter()
            .filter(|e| joins(e, a, b))
            .map(|e| e.layer.clone())
            .collect()
    }

    /// Zones other than `source` reachable using only `layers`.
    pub fn reach(&self, source: &str, layers: &BTreeSet<String>) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([source.to_owned()]);
        let mut frontier = vec![source.to_owned()];
        while let Some(x) = frontier.pop() {
            for e in self.edges.iter().filter(|e| layers.contains(&e.layer)) {
                if let Some(y) = other(e, &x) {
                    if seen.insert(y.to_owned()) {
                        frontier.push(y.to_owned());
                    }
                }
            }
        }
        seen.remove(source);
        seen
    }

    fn all_layers(&self) -> BTreeSet<String> {
        self.layers.iter().cloned().collect()
    }

    fn w_hat(&self, a: &str, b: &str, layer: &str, cfg: Config) -> f64 {
        let Some(e) = self.edge(a, b, layer) else {
            return 0.0;
        };
        if !cfg.share {
            return e.weight;
        }
        let total: f64 = self
            .edges
            .iter()
            .filter(|f| joins(f, a, b))
            .map(|f| f.weight)
            .sum();
        if total > 0.0 {
            e.weight / total
        } else {
            0.0
        }
    }

    /// h_l(a, b).
    pub fn intensity(&self, a: &str, b: &str, layer: &str, cfg: Config) -> f64 {
        let ga = self.neighbours(a, layer);
        let gb = self.neighbours(b, layer);
        let smallest = ga.len().min(gb.len());
        if smallest == 0 {
            return 0.0;
        }
        let common = ga.intersection(&gb).count();
        self.w_hat(a, b, layer, cfg) * common as f64 / smallest as f64
    }

    /// LR(x, l).
    pub fn relevance(&self, x: &str, layer: &str) -> f64 {
        let all = self.all_layers();
        let full = self.reach(x, &all).len();
        if full == 0 {
            return 0.0;
        }
        let mut rest = all;
        rest.remove(layer);
        1.0 - self.reach(x, &rest).len() as f64 / full as f64
    }

    /// r_l(a, b).
    pub fn redundancy(&self, a: &str, b: &str, layer: &str) -> f64 {
        if self.layers.is_empty() {
            return 0.0;
        }
        let shared = self
            .layers
            .iter()
            .filter(|m| self.edge(a, b, m).is_some())
            .count();
        (1.0 - self.relevance(a, layer)) * (1.0 - self.relevance(b, layer)) * shared as f64
            / self.layers.len() as f64
    }

    /// c(a, b), summed over every layer.
    pub fn connectivity(&self, a: &str, b: &str, cfg: Config) -> f64 {
        self.layers
            .iter()
            .filter(|l| self.edge(a, b, l).is_some())
            .map(|l| self.intensity(a, b, l, cfg) * (1.0 + self.redundancy(a, b, l)))
            .sum()
    }

    fn without_edge(&self, a: &str, b: &str, layer: &str) -> Multiplex {
        Multiplex {
            zones: self.zones.clone(),
            layers: self.layers.clone(),
            edges: self
                .edges
                .iter()
                .filter(|e| !(e.layer == layer && joins(e, a, b)))
                .cloned()
                .collect(),
        }
    }

    /// H(x) and, when x has any edge, the `(layer, neighbour, disconnected)`
    /// removal attaining it.
    pub fn heelness(&self, x: &str, cfg: Config) -> (f64, Option<(String, String, usize)>) {
        let nbrs = self.all_neighbours(x);
        if nbrs.is_empty() {
            return (0.0, None);
        }
        let min_c = nbrs
            .iter()
            .map(|v| self.connectivity(x, v, cfg))
            .fold(f64::INFINITY, f64::min);
        let denominator = min_c.max(cfg.epsilon);
        let before = self.reach(x, &self.all_layers()).len();
        let mut best: Option<(f64, (String, String, usize))> = None;
        for layer in &self.layers {
            let mut weakest: Option<(f64, String)> = None;
            for v in self.neighbours(x, layer) {
                let c = self.connectivity(x, &v, cfg);
                let better = match &weakest {
                    None => true,
                    Some((bc, bv)) => (c < *bc && !same(c, *bc)) || (same(c, *bc) && v < *bv),
                };
                if better {
                    weakest = Some((c, v));
                }
            }
            let Some((_, v)) = weakest else { continue };
            let after = self
                .without_edge(x, &v, layer)
                .reach(x, &self.all_layers())
                .len();
            let lost = before - after;
            let value = lost as f64 / denominator;
            if best
                .as_ref()
                .is_none_or(|(b, _)| value > *b && !same(value, *b))
            {
                best = Some((value, (layer.clone(), v, lost)));
            }
        }
        match best {
            Some((value, w)) => (value, Some(w)),
            None => (0.0, None),
        }
    }

    /// argmax of positive H, ties to the smallest id.
    pub fn achilles_heel(&self, cfg: Config) -> Option<(String, f64)> {
        let mut best: Option<(String, f64)> = None;
        for z in &self.zones {
            let (h, _) = self.heelness(z, cfg);
            if h <= 0.0 {
                continue;
            }
            if best.as_ref().is_none_or(|(_, b)| h > *b && !same(h, *b)) {
                best = Some((z.clone(), h));
            }
        }
        best
    }

    /// Size of the largest connected component of the flattened graph.
    pub fn giant(&self) -> usize {
        let all = self.all_layers();
        self.zones
            .iter()
            .map(|z| self.reach(z, &all).len() + 1)
            .max()
            .unwrap_or(0)
    }

    fn canonical(e: &Edge) -> (String, String, String) {
        let (u, v) = if e.u <= e.v {
            (e.u.clone(), e.v.clone())
        } else {
            (e.v.clone(), e.u.clone())
        };
        (u, v, e.layer.clone())
    }

    /// Index of the edge to remove next: extreme pair connectivity, ties by
    /// canonical `(u, v, layer)`.
    fn pick(&self, weakest: bool, cfg: Config) -> usize {
        let mut best: Option<(f64, (String, String, String), usize)> = None;
        for (i, e) in self.edges.iter().enumerate() {
            let c = self.connectivity(&e.u, &e.v, cfg);
            let key = Self::canonical(e);
            let better = match &best {
                None => true,
                Some((bc, bk, _)) => {
                    if same(c, *bc) {
                        key < *bk
                    } else if weakest {
                        c < *bc
                    } else {
                        c > *bc
                    }
                }
            };
            if better {
                best = Some((c, key, i));
            }
        }
        best.expect("pick needs an edge").2
    }

    /// Percolation curve with recomputation after every removal:
    /// `(fraction removed, relative giant size)` including the initial point,
    /// plus the removal order as canonical triples.
    pub fn percolate(&self, weakest: bool, cfg: Config) -> (Curve, RemovalLog) {
        let n = self.zones.len() as f64;
        let total = self.edges.len();
        let mut net = self.clone();
        let mut curve = vec![(0.0, net.giant() as f64 / n)];
        let mut log = Vec::new();
        for k in 1..=total {
            let i = net.pick(weakest, cfg);
            let e = net.edges.remove(i);
            log.push(Self::canonical(&e));
            curve.push((k as f64 / total as f64, net.giant() as f64 / n));
        }
        (curve, log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(u: &str, v: &str, l: &str, w: f64) -> Edge {
        Edge {
            u: u.into(),
            v: v.into(),
            layer: l.into(),
            weight: w,
        }
    }

    fn n1() -> Multiplex {
        Multiplex::new(
            ["A", "B", "C", "D"].map(String::from).to_vec(),
            vec!["layer1".into(), "layer2".into()],
            vec![
                e("A", "B", "layer1", 10.0),
                e("A", "C", "layer1", 20.0),
                e("B", "C", "layer1", 30.0),
                e("C", "D", "layer2", 5.0),
            ],
        )
    }

    #[test]
    fn n1_values() {
        let net = n1();
        let cfg = Config::default();
        assert!((net.relevance("A", "layer2") - 1.0 / 3.0).abs() < 1e-15);
        assert!((net.relevance("D", "layer1") - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(net.connectivity("C", "D", cfg), 0.0);
        assert!((net.connectivity("A", "B", cfg) - 5.0).abs() < 1e-12);
        assert_eq!(net.achilles_heel(cfg).unwrap().0, "D");
    }

    #[test]
    fn single_edge_curve() {
        let net = Multiplex::new(
            vec!["A".into(), "B".into()],
            vec!["x".into()],
            vec![e("A", "B", "x", 1.0)],
        );
        let (curve, _) = net.percolate(true, Config::default());
        assert_eq!(curve, vec![(0.0, 1.0), (1.0, 0.5)]);
    }
}
