use super::config::SystemModelConfig;
use crate::nn::{Mlp2, Parameters};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct GnModuleParams {
    pub phi_e: Mlp2,
    pub phi_v: Mlp2,
}

impl Parameters for GnModuleParams {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.phi_e.visit(f);
        self.phi_v.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.phi_e.visit_mut(f);
        self.phi_v.visit_mut(f);
    }
}

/// All trainable tensors of `f_θ`, in the order they are flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct GnrkParams {
    pub node_encoders: Vec<Mlp2>,
    pub edge_encoders: Vec<Mlp2>,
    pub global_encoders: Vec<Mlp2>,
    pub modules: Vec<GnModuleParams>,
    pub decoder: Mlp2,
}

impl GnrkParams {
    /// Builds the parameter layout of `cfg`, drawing every tensor from `make`
    /// in declaration order.
    fn build(cfg: &SystemModelConfig, make: &mut dyn FnMut(usize, usize, usize) -> Mlp2) -> Self {
        let (emb, hid) = (cfg.embed_dim, cfg.encoder_hidden);
        let node_encoders = cfg.node_inputs.iter().map(|i| make(i.dim(), hid, emb)).collect();
        let edge_encoders = cfg.edge_inputs.iter().map(|i| make(i.dim(), hid, emb)).collect();
        let global_encoders = cfg.global_inputs.iter().map(|i| make(i.dim(), hid, emb)).collect();
        let modules = (0..cfg.num_modules)
            .map(|k| GnModuleParams {
                phi_e: make(cfg.message_input_width(k), cfg.gn_hidden, cfg.message_dim),
                phi_v: make(cfg.node_update_input_width(k), cfg.gn_hidden, cfg.node_dim),
            })
            .collect();
        let decoder = make(cfg.node_dim, cfg.decoder_hidden, cfg.d_state());
        GnrkParams {
            node_encoders,
            edge_encoders,
            global_encoders,
            modules,
            decoder,
        }
    }

    pub fn init(cfg: &SystemModelConfig, rng: &mut Rng) -> Self {
        GnrkParams::build(cfg, &mut |i, h, o| Mlp2::init(i, h, o, rng))
    }

    pub fn zeros(cfg: &SystemModelConfig) -> Self {
        GnrkParams::build(cfg, &mut Mlp2::zeros)
    }

    /// Closed-form parameter count of `cfg`.
    pub fn count_for(cfg: &SystemModelConfig) -> usize {
        let mut total = 0;
        GnrkParams::build(cfg, &mut |i, h, o| {
            total += Mlp2::param_count(i, h, o);
            Mlp2::zeros(0, 0, 0)
        });
        total
    }
}

impl Parameters for GnrkParams {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for m in self
            .node_encoders
            .iter()
            .chain(&self.edge_encoders)
            .chain(&self.global_encoders)
        {
            m.visit(f);
        }
        for m in &self.modules {
            m.visit(f);
        }
        self.decoder.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for m in self
            .node_encoders
            .iter_mut()
            .chain(&mut self.edge_encoders)
            .chain(&mut self.global_encoders)
        {
            m.visit_mut(f);
        }
        for m in &mut self.modules {
            m.visit_mut(f);
        }
        self.decoder.visit_mut(f);
    }
}
