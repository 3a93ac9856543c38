use ndarray::{Array2, ArrayView2};

use super::batch::{gather_cols, scatter_add_cols, take_cols, GraphBatch};
use super::config::{InputSource, SystemModelConfig};
use super::params::GnrkParams;
use crate::error::{Error, Result};
use crate::nn::MlpCache;
use crate::solver::Rhs;

struct Encoded {
    input: Array2<f64>,
    cache: MlpCache,
    output: Array2<f64>,
}

/// `f_θ` bound to a batch, with the state-independent encodings computed once.
pub struct Network<'a> {
    cfg: &'a SystemModelConfig,
    params: &'a GnrkParams,
    batch: &'a GraphBatch,
    node_static: Vec<Option<Encoded>>,
    edge_static: Vec<Encoded>,
    global_static: Vec<Encoded>,
    /// Concatenated edge embeddings, `rows x edge_embed_width`.
    edge_emb: Array2<f64>,
    /// Concatenated global embeddings, `graphs x global_embed_width`.
    global_emb: Array2<f64>,
}

struct ModuleRecord {
    edge_in: Array2<f64>,
    edge_cache: MlpCache,
    node_in: Array2<f64>,
    node_cache: MlpCache,
}

/// Everything one evaluation of `f_θ` needs for its backward pass.
pub struct EvalRecord {
    state: Array2<f64>,
    encoders: Vec<Option<(Array2<f64>, MlpCache)>>,
    modules: Vec<ModuleRecord>,
    decoder_in: Array2<f64>,
    decoder_cache: MlpCache,
}

/// Gradients with respect to the static embeddings, accumulated over every
/// evaluation that shares them.
pub struct StaticGrads {
    node: Vec<Option<Array2<f64>>>,
    edge: Array2<f64>,
    global: Array2<f64>,
}

fn encode(mlp: &crate::nn::Mlp2, input: Array2<f64>) -> Encoded {
    let (output, cache) = mlp.forward_cached(input.view());
    Encoded { input, cache, output }
}

impl<'a> Network<'a> {
    pub fn new(cfg: &'a SystemModelConfig, params: &'a GnrkParams, batch: &'a GraphBatch) -> Result<Self> {
        if batch.node_features.len() != cfg.node_inputs.len()
            || batch.edge_features.len() != cfg.edge_inputs.len()
            || batch.global_features.len() != cfg.global_inputs.len()
        {
            return Err(Error::shape("batch was prepared for a different model layout"));
        }
        let emb = cfg.embed_dim;
        let node_static = batch
            .node_features
            .iter()
            .zip(&params.node_encoders)
            .map(|(f, mlp)| f.as_ref().map(|x| encode(mlp, x.clone())))
            .collect();
        let edge_static: Vec<Encoded> = batch
            .edge_features
            .iter()
            .zip(&params.edge_encoders)
            .map(|(x, mlp)| encode(mlp, x.clone()))
            .collect();
        let global_static: Vec<Encoded> = batch
            .global_features
            .iter()
            .zip(&params.global_encoders)
            .map(|(x, mlp)| encode(mlp, x.clone()))
            .collect();
        let mut edge_emb = Array2::zeros((batch.num_edge_rows(), cfg.edge_embed_width()));
        for (i, e) in edge_static.iter().enumerate() {
            gather_cols(&mut edge_emb, i * emb, &e.output, 0, emb, None);
        }
        let mut global_emb = Array2::zeros((batch.num_graphs(), cfg.global_embed_width()));
        for (i, g) in global_static.iter().enumerate() {
            gather_cols(&mut global_emb, i * emb, &g.output, 0, emb, None);
        }
        Ok(Network {
            cfg,
            params,
            batch,
            node_static,
            edge_static,
            global_static,
            edge_emb,
            global_emb,
        })
    }

    pub fn batch(&self) -> &GraphBatch {
        self.batch
    }

    pub fn config(&self) -> &SystemModelConfig {
        self.cfg
    }

    fn check_state(&self, state: ArrayView2<'_, f64>) -> Result<()> {
        if state.dim() != (self.batch.num_nodes, self.cfg.d_state()) {
            return Err(Error::shape(format!(
                "state is {:?}, expected ({}, {})",
                state.dim(),
                self.batch.num_nodes,
                self.cfg.d_state()
            )));
        }
        Ok(())
    }

    /// Evaluates `f_θ(state)` and keeps what the backward pass needs.
    pub fn eval_recorded(&self, state: ArrayView2<'_, f64>) -> Result<(Array2<f64>, EvalRecord)> {
        self.check_state(state)?;
        let cfg = self.cfg;
        let batch = self.batch;
        let (n, emb) = (batch.num_nodes, cfg.embed_dim);

        let mut v = Array2::zeros((n, cfg.node_embed_width()));
        let mut encoders = Vec::with_capacity(cfg.node_inputs.len());
        for (i, input) in cfg.node_inputs.iter().enumerate() {
            let x = match input {
                InputSource::State { channel } => Array2::from_shape_fn((n, 1), |(r, _)| state[[r, *channel]]),
                InputSource::Angle { channel } => Array2::from_shape_fn((n, 2), |(r, c)| {
                    let theta = state[[r, *channel]];
                    if c == 0 {
                        theta.cos()
                    } else {
                        theta.sin()
                    }
                }),
                InputSource::Feature { .. } => {
                    let enc = self.node_static[i].as_ref().expect("static node encoding");
                    gather_cols(&mut v, i * emb, &enc.output, 0, emb, None);
                    encoders.push(None);
                    continue;
                }
            };
            let (y, cache) = self.params.node_encoders[i].forward_cached(x.view());
            gather_cols(&mut v, i * emb, &y, 0, emb, None);
            encoders.push(Some((x, cache)));
        }

        let edge_w = cfg.edge_embed_width();
        let global_w = cfg.global_embed_width();
        let mut modules = Vec::with_capacity(cfg.num_modules);
        for (k, module) in self.params.modules.iter().enumerate() {
            let vin = cfg.module_node_width(k);
            let mut edge_in = Array2::zeros((batch.num_edge_rows(), cfg.message_input_width(k)));
            let mut col = 0;
            if cfg.receiver_in_message {
                gather_cols(&mut edge_in, col, &v, 0, vin, Some(&batch.receivers));
                col += vin;
            }
            gather_cols(&mut edge_in, col, &v, 0, vin, Some(&batch.senders));
            col += vin;
            gather_cols(&mut edge_in, col, &self.edge_emb, 0, edge_w, None);
            col += edge_w;
            if cfg.global_in_message {
                gather_cols(
                    &mut edge_in,
                    col,
                    &self.global_emb,
                    0,
                    global_w,
                    Some(&batch.edge_graph),
                );
            }
            let (messages, edge_cache) = module.phi_e.forward_cached(edge_in.view());

            let msg = cfg.message_dim;
            let mut node_in = Array2::zeros((n, cfg.node_update_input_width(k)));
            scatter_add_cols(&mut node_in, 0, &messages, 0, msg, Some(&batch.receivers));
            gather_cols(&mut node_in, msg, &v, 0, vin, None);
            if cfg.global_in_node {
                gather_cols(
                    &mut node_in,
                    msg + vin,
                    &self.global_emb,
                    0,
                    global_w,
                    Some(&batch.node_graph),
                );
            }
            let (v_next, node_cache) = module.phi_v.forward_cached(node_in.view());
            modules.push(ModuleRecord {
                edge_in,
                edge_cache,
                node_in,
                node_cache,
            });
            v = v_next;
        }
        let (w, decoder_cache) = self.params.decoder.forward_cached(v.view());
        Ok((
            w,
            EvalRecord {
                state: state.to_owned(),
                encoders,
                modules,
                decoder_in: v,
                decoder_cache,
            },
        ))
    }

    pub fn zero_static_grads(&self) -> StaticGrads {
        StaticGrads {
            node: self
                .node_static
                .iter()
                .map(|e| e.as_ref().map(|e| Array2::zeros(e.output.raw_dim())))
                .collect(),
            edge: Array2::zeros(self.edge_emb.raw_dim()),
            global: Array2::zeros(self.global_emb.raw_dim()),
        }
    }

    /// Back-propagates `dL/dW` through one recorded evaluation. Parameter
    /// gradients are added to `grads`, static-embedding gradients to
    /// `statics`; returns `dL/dstate`.
    pub fn backward(
        &self,
        record: &EvalRecord,
        d_out: &Array2<f64>,
        grads: &mut GnrkParams,
        statics: &mut StaticGrads,
    ) -> Result<Array2<f64>> {
        let cfg = self.cfg;
        let batch = self.batch;
        if d_out.dim() != (batch.num_nodes, cfg.d_state()) || record.state.nrows() != batch.num_nodes {
            return Err(Error::Usage(
                "backward called with a record from a different batch".into(),
            ));
        }
        let (n, emb, msg) = (batch.num_nodes, cfg.embed_dim, cfg.message_dim);
        let edge_w = cfg.edge_embed_width();
        let global_w = cfg.global_embed_width();

        let mut dv = self.params.decoder.backward(
            record.decoder_in.view(),
            &record.decoder_cache,
            d_out.view(),
            &mut grads.decoder,
        );
        for k in (0..cfg.num_modules).rev() {
            let module = &self.params.modules[k];
            let rec = &record.modules[k];
            let gmod = &mut grads.modules[k];
            let vin = cfg.module_node_width(k);

            let d_node_in = module
                .phi_v
                .backward(rec.node_in.view(), &rec.node_cache, dv.view(), &mut gmod.phi_v);
            let mut dv_prev = take_cols(&d_node_in, msg, vin);
            if cfg.global_in_node {
                scatter_add_cols(
                    &mut statics.global,
                    0,
                    &d_node_in,
                    msg + vin,
                    global_w,
                    Some(&batch.node_graph),
                );
            }
            let mut d_msg = Array2::zeros((batch.num_edge_rows(), msg));
            gather_cols(&mut d_msg, 0, &d_node_in, 0, msg, Some(&batch.receivers));

            let d_edge_in = module
                .phi_e
                .backward(rec.edge_in.view(), &rec.edge_cache, d_msg.view(), &mut gmod.phi_e);
            let mut col = 0;
            if cfg.receiver_in_message {
                scatter_add_cols(&mut dv_prev, 0, &d_edge_in, col, vin, Some(&batch.receivers));
                col += vin;
            }
            scatter_add_cols(&mut dv_prev, 0, &d_edge_in, col, vin, Some(&batch.senders));
            col += vin;
            scatter_add_cols(&mut statics.edge, 0, &d_edge_in, col, edge_w, None);
            col += edge_w;
            if cfg.global_in_message {
                scatter_add_cols(
                    &mut statics.global,
                    0,
                    &d_edge_in,
                    col,
                    global_w,
                    Some(&batch.edge_graph),
                );
            }
            dv = dv_prev;
        }

        let mut d_state = Array2::zeros((n, cfg.d_state()));
        for (i, input) in cfg.node_inputs.iter().enumerate() {
            let block = take_cols(&dv, i * emb, emb);
            match (input, &record.encoders[i]) {
                (InputSource::State { channel }, Some((x, cache))) => {
                    let dx = self.params.node_encoders[i].backward(
                        x.view(),
                        cache,
                        block.view(),
                        &mut grads.node_encoders[i],
                    );
                    for r in 0..n {
                        d_state[[r, *channel]] += dx[[r, 0]];
                    }
                }
                (InputSource::Angle { channel }, Some((x, cache))) => {
                    let dx = self.params.node_encoders[i].backward(
                        x.view(),
                        cache,
                        block.view(),
                        &mut grads.node_encoders[i],
                    );
                    for r in 0..n {
                        // x = (cos θ, sin θ)
                        d_state[[r, *channel]] += -x[[r, 1]] * dx[[r, 0]] + x[[r, 0]] * dx[[r, 1]];
                    }
                }
                (InputSource::Feature { .. }, None) => {
                    *statics.node[i].as_mut().expect("static node gradient") += &block;
                }
                _ => return Err(Error::Usage("record does not match the model inputs".into())),
            }
        }
        Ok(d_state)
    }

    /// Back-propagates the accumulated static-embedding gradients into the
    /// feature encoders.
    pub fn backward_static(&self, statics: &StaticGrads, grads: &mut GnrkParams) {
        let emb = self.cfg.embed_dim;
        for (i, enc) in self.node_static.iter().enumerate() {
            if let (Some(enc), Some(g)) = (enc, &statics.node[i]) {
                self.params.node_encoders[i].backward(
                    enc.input.view(),
                    &enc.cache,
                    g.view(),
                    &mut grads.node_encoders[i],
                );
            }
        }
        for (i, enc) in self.edge_static.iter().enumerate() {
            let g = take_cols(&statics.edge, i * emb, emb);
            self.params.edge_encoders[i].backward(enc.input.view(), &enc.cache, g.view(), &mut grads.edge_encoders[i]);
        }
        for (i, enc) in self.global_static.iter().enumerate() {
            let g = take_cols(&statics.global, i * emb, emb);
            self.params.global_encoders[i].backward(
                enc.input.view(),
                &enc.cache,
                g.view(),
                &mut grads.global_encoders[i],
            );
        }
    }
}

impl Rhs for Network<'_> {
    fn eval(&self, state: ArrayView2<'_, f64>) -> Array2<f64> {
        self.eval_recorded(state)
            .expect("state shape matches the bound graph")
            .0
    }
}
