use ndarray::Array2;
use rand::Rng;

use super::net::{Carry, QNet};
use crate::env::{AccessPolicy, Action, ContentionView};
use crate::rng::SimRng;

/// With probability `eps` a uniform random action, otherwise the argmax of
/// `q`; equal Q-values choose transmit.
pub fn act_epsilon_greedy<R: Rng + ?Sized>(q: [f64; 2], eps: f64, rng: &mut R) -> Action {
    if eps > 0.0 && rng.random::<f64>() < eps {
        return Action::from(rng.random::<bool>());
    }
    greedy(q)
}

fn greedy(q: [f64; 2]) -> Action {
    Action::from(q[1] >= q[0])
}

/// Decentralized policy: every BS runs its own CON network on its own
/// observations, carrying the recurrent state from slot to slot.
pub struct RlPolicy<'a> {
    nets: Vec<&'a QNet>,
    carries: Vec<Carry>,
    eps: f64,
    rng: SimRng,
    name: String,
}

impl<'a> RlPolicy<'a> {
    pub fn new(con_nets: Vec<&'a QNet>, eps: f64, rng: SimRng) -> Self {
        Self {
            carries: con_nets.iter().map(|n| Carry::zeros(1, n.shape.hidden)).collect(),
            nets: con_nets,
            eps,
            rng,
            name: "rl".into(),
        }
    }

    pub fn greedy(con_nets: Vec<&'a QNet>, rng: SimRng) -> Self {
        Self::new(con_nets, 0.0, rng)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl AccessPolicy for RlPolicy<'_> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn reset(&mut self, _n_bs: usize) {
        for (c, n) in self.carries.iter_mut().zip(&self.nets) {
            *c = Carry::zeros(1, n.shape.hidden);
        }
    }

    fn decide(&mut self, view: &ContentionView<'_>) -> Action {
        // A fully random policy never reads the network.
        if self.eps >= 1.0 {
            return Action::from(self.rng.random::<bool>());
        }
        let net = self.nets[view.bs];
        let x = Array2::from_shape_vec((1, view.obs.width()), view.obs.features()).expect("row vector");
        let (q, carry) = net
            .forward(x.view(), 1, &self.carries[view.bs])
            .expect("observation width matches the network");
        self.carries[view.bs] = carry;
        act_epsilon_greedy([q[[0, 0]], q[[0, 1]]], self.eps, &mut self.rng)
    }
}
