//! The staging model: per-epoch conv encoder (weight-shared across the
//! sequence), self-attention context encoder with learned positional
//! embeddings, transposed-conv decoder, and a linear-softmax classifier.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{ParamSet, Real, Tape, Tensor, Var};

use crate::config::ModelConfig;

/// Forward mode: training applies dropout from the supplied stream, eval is
/// deterministic.
pub enum Mode<'r> {
    Train { rng: &'r mut ChaCha8Rng },
    Eval,
}

const LN_EPS: f64 = 1e-5;

struct ConvIdx {
    w: usize,
    b: usize,
    ln_g: usize,
    ln_b: usize,
}

struct AttnIdx {
    ln1_g: usize,
    ln1_b: usize,
    q_w: usize,
    q_b: usize,
    k_w: usize,
    k_b: usize,
    v_w: usize,
    v_b: usize,
    o_w: usize,
    o_b: usize,
    ln2_g: usize,
    ln2_b: usize,
    ff1_w: usize,
    ff1_b: usize,
    ff2_w: usize,
    ff2_b: usize,
}

struct DecIdx {
    w: usize,
    b: usize,
    activated: bool,
}

struct Layout {
    conv: Vec<ConvIdx>,
    proj_w: usize,
    proj_b: usize,
    pos: usize,
    attn: Vec<AttnIdx>,
    final_g: usize,
    final_b: usize,
    dec_proj_w: usize,
    dec_proj_b: usize,
    dec: Vec<DecIdx>,
    cls_w: usize,
    cls_b: usize,
}

pub struct StagingModel<T: Real> {
    cfg: ModelConfig,
    params: ParamSet<T>,
    layout: Layout,
}

impl<T: Real> StagingModel<T> {
    /// Deterministic initialization from `seed`.
    pub fn new(cfg: &ModelConfig, seed: u64) -> Self {
        cfg.validate().expect("invalid model config");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let d = cfg.feature_dim;

        let mut conv = Vec::new();
        let mut c_in = cfg.channels;
        for (i, (&c_out, &k)) in cfg.conv_channels.iter().zip(&cfg.conv_kernels).enumerate() {
            let std = (2.0 / (c_in * k) as f64).sqrt();
            conv.push(ConvIdx {
                w: params.push(format!("enc.conv{i}.w"), Tensor::randn(&[c_out, c_in, k], std, &mut rng)),
                b: params.push(format!("enc.conv{i}.b"), Tensor::zeros(&[c_out])),
                ln_g: params.push(format!("enc.conv{i}.ln.g"), Tensor::full(&[c_out], T::ONE)),
                ln_b: params.push(format!("enc.conv{i}.ln.b"), Tensor::zeros(&[c_out])),
            });
            c_in = c_out;
        }
        // flatten the conv map (channels x latent width) into the feature
        // projection; pooling away the time axis would discard the phase
        // detail the decoder and the sequence statistics rely on
        let c_last = *cfg.conv_channels.last().unwrap();
        let flat_width = c_last * cfg.latent_width();
        let proj_std = (2.0 / flat_width as f64).sqrt();
        let proj_w = params.push("enc.proj.w", Tensor::randn(&[flat_width, d], proj_std, &mut rng));
        let proj_b = params.push("enc.proj.b", Tensor::zeros(&[d]));
        let pos = params.push("enc.pos", Tensor::randn(&[cfg.seq_len, d], 0.02, &mut rng));

        let attn_std = (1.0 / d as f64).sqrt();
        let ff_std = (2.0 / d as f64).sqrt();
        let ff2_std = (2.0 / cfg.ffn_hidden as f64).sqrt();
        let mut attn = Vec::new();
        for i in 0..cfg.attn_layers {
            attn.push(AttnIdx {
                ln1_g: params.push(format!("enc.attn{i}.ln1.g"), Tensor::full(&[d], T::ONE)),
                ln1_b: params.push(format!("enc.attn{i}.ln1.b"), Tensor::zeros(&[d])),
                q_w: params.push(format!("enc.attn{i}.q.w"), Tensor::randn(&[d, d], attn_std, &mut rng)),
                q_b: params.push(format!("enc.attn{i}.q.b"), Tensor::zeros(&[d])),
                k_w: params.push(format!("enc.attn{i}.k.w"), Tensor::randn(&[d, d], attn_std, &mut rng)),
                k_b: params.push(format!("enc.attn{i}.k.b"), Tensor::zeros(&[d])),
                v_w: params.push(format!("enc.attn{i}.v.w"), Tensor::randn(&[d, d], attn_std, &mut rng)),
                v_b: params.push(format!("enc.attn{i}.v.b"), Tensor::zeros(&[d])),
                o_w: params.push(format!("enc.attn{i}.o.w"), Tensor::randn(&[d, d], attn_std, &mut rng)),
                o_b: params.push(format!("enc.attn{i}.o.b"), Tensor::zeros(&[d])),
                ln2_g: params.push(format!("enc.attn{i}.ln2.g"), Tensor::full(&[d], T::ONE)),
                ln2_b: params.push(format!("enc.attn{i}.ln2.b"), Tensor::zeros(&[d])),
                ff1_w: params.push(format!("enc.attn{i}.ff1.w"), Tensor::randn(&[d, cfg.ffn_hidden], ff_std, &mut rng)),
                ff1_b: params.push(format!("enc.attn{i}.ff1.b"), Tensor::zeros(&[cfg.ffn_hidden])),
                ff2_w: params.push(format!("enc.attn{i}.ff2.w"), Tensor::randn(&[cfg.ffn_hidden, d], ff2_std, &mut rng)),
                ff2_b: params.push(format!("enc.attn{i}.ff2.b"), Tensor::zeros(&[d])),
            });
        }
        let final_g = params.push("enc.final_ln.g", Tensor::full(&[d], T::ONE));
        let final_b = params.push("enc.final_ln.b", Tensor::zeros(&[d]));

        // decoder mirrors the conv stack with stride-2 transposed convs
        let latent = cfg.latent_width();
        let dec_proj_std = (2.0 / d as f64).sqrt();
        let dec_proj_w = params.push(
            "dec.proj.w",
            Tensor::randn(&[d, c_last * latent], dec_proj_std, &mut rng),
        );
        let dec_proj_b = params.push("dec.proj.b", Tensor::zeros(&[c_last * latent]));
        let mut dec = Vec::new();
        let mut widths: Vec<usize> = cfg.conv_channels.clone();
        widths.pop();
        widths.reverse();
        widths.push(cfg.channels); // e.g. [4,8,16] -> steps 16->8, 8->4, 4->C
        let mut dc_in = c_last;
        for (i, &dc_out) in widths.iter().enumerate() {
            let std = (2.0 / (dc_in * 4) as f64).sqrt();
            dec.push(DecIdx {
                w: params.push(format!("dec.conv{i}.w"), Tensor::randn(&[dc_in, dc_out, 4], std, &mut rng)),
                b: params.push(format!("dec.conv{i}.b"), Tensor::zeros(&[dc_out])),
                activated: i + 1 != widths.len(), // last block stays linear
            });
            dc_in = dc_out;
        }

        let cls_std = (1.0 / d as f64).sqrt();
        let cls_w = params.push("cls.w", Tensor::randn(&[d, cfg.num_stages], cls_std, &mut rng));
        let cls_b = params.push("cls.b", Tensor::zeros(&[cfg.num_stages]));

        StagingModel {
            cfg: cfg.clone(),
            params,
            layout: Layout {
                conv,
                proj_w,
                proj_b,
                pos,
                attn,
                final_g,
                final_b,
                dec_proj_w,
                dec_proj_b,
                dec,
                cls_w,
                cls_b,
            },
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    /// Replace parameters (e.g. from a checkpoint); names and shapes must
    /// match the architecture.
    pub fn set_params(&mut self, params: ParamSet<T>) {
        assert_eq!(params.len(), self.params.len(), "parameter count mismatch");
        for i in 0..params.len() {
            assert_eq!(params.name(i), self.params.name(i), "parameter order mismatch");
            assert_eq!(
                params.tensor(i).shape(),
                self.params.tensor(i).shape(),
                "parameter shape mismatch for {}",
                params.name(i)
            );
        }
        self.params = params;
    }

    /// Indices of trainable parameters; the decoder is excluded when the
    /// training arm never reconstructs.
    pub fn trainable_indices(&self, include_decoder: bool) -> Vec<usize> {
        self.params
            .indices_where(|name| include_decoder || !name.starts_with("dec."))
    }

    /// Register all parameters on `tape` and return the forward-pass handle.
    pub fn bind<'m, 't>(&'m self, tape: &'t Tape<T>) -> BoundModel<'m, 't, T> {
        BoundModel {
            model: self,
            vars: self.params.bind(tape),
        }
    }

    /// Forward-pass handle over externally supplied parameter vars (in
    /// `ParamSet` order); used by gradient checks that differentiate with
    /// respect to the parameters themselves.
    pub fn bind_external<'m, 't>(&'m self, vars: Vec<Var<'t, T>>) -> BoundModel<'m, 't, T> {
        assert_eq!(vars.len(), self.params.len(), "bind_external: wrong var count");
        BoundModel { model: self, vars }
    }

    pub fn cast<U: Real>(&self) -> StagingModel<U> {
        let mut out = StagingModel::new(&self.cfg, 0);
        out.set_params(self.params.cast());
        out
    }
}

pub struct BoundModel<'m, 't, T: Real> {
    model: &'m StagingModel<T>,
    vars: Vec<Var<'t, T>>,
}

impl<'m, 't, T: Real> BoundModel<'m, 't, T> {
    fn v(&self, idx: usize) -> Var<'t, T> {
        self.vars[idx]
    }

    /// Tape var of parameter `idx` (in `ParamSet` order), for gradient reads.
    pub fn var(&self, idx: usize) -> Var<'t, T> {
        self.vars[idx]
    }

    pub fn config(&self) -> &ModelConfig {
        &self.model.cfg
    }

    fn maybe_dropout(&self, x: Var<'t, T>, mode: &mut Mode<'_>) -> Var<'t, T> {
        match mode {
            Mode::Train { rng } => x.dropout(self.model.cfg.dropout, rng),
            Mode::Eval => x,
        }
    }

    /// Intra-epoch features: conv stack + global average + projection,
    /// before positional encoding and attention. (batch, L, n, C) -> (batch, L, d).
    pub fn encode_intra(&self, x: Var<'t, T>, _mode: &mut Mode<'_>) -> Var<'t, T> {
        let cfg = &self.model.cfg;
        let shape = x.shape();
        assert_eq!(
            shape,
            vec![shape[0], cfg.seq_len, cfg.samples_per_epoch, cfg.channels],
            "encode: batch shape {:?} does not match config (B, {}, {}, {})",
            shape,
            cfg.seq_len,
            cfg.samples_per_epoch,
            cfg.channels
        );
        let batch = shape[0];
        let flat = batch * cfg.seq_len;
        // (B, L, n, C) -> (B*L, C, n)
        let mut h = x
            .reshape(&[flat, cfg.samples_per_epoch, cfg.channels])
            .permute(&[0, 2, 1]);
        for (block, &k) in self.model.layout.conv.iter().zip(&cfg.conv_kernels) {
            let c_out = self.v(block.w).shape()[0];
            h = h
                .conv1d(self.v(block.w), 2, (k - 1) / 2)
                .add_var(self.v(block.b).reshape(&[c_out, 1]))
                .gelu()
                .layer_norm_channels(self.v(block.ln_g), self.v(block.ln_b), LN_EPS);
        }
        let c_last = *cfg.conv_channels.last().unwrap();
        let flat_width = c_last * cfg.latent_width();
        h.reshape(&[flat, flat_width])
            .matmul(self.v(self.model.layout.proj_w))
            .add_var(self.v(self.model.layout.proj_b))
            .reshape(&[batch, cfg.seq_len, cfg.feature_dim])
    }

    /// Inter-epoch context encoding over intra-epoch features:
    /// positional embedding + pre-norm self-attention blocks + final norm.
    pub fn encode_context(&self, h: Var<'t, T>, mode: &mut Mode<'_>) -> Var<'t, T> {
        let cfg = &self.model.cfg;
        let shape = h.shape();
        let (batch, l, d) = (shape[0], shape[1], shape[2]);
        assert_eq!(
            (l, d),
            (cfg.seq_len, cfg.feature_dim),
            "encode_context: features {:?} do not match config",
            shape
        );
        let heads = cfg.attn_heads;
        let dh = d / heads;
        let mut x = h.add_var(self.v(self.model.layout.pos));
        x = self.maybe_dropout(x, mode);
        for layer in &self.model.layout.attn {
            let a = x.layer_norm(self.v(layer.ln1_g), self.v(layer.ln1_b), LN_EPS);
            let project = |w: usize, b: usize| {
                a.reshape(&[batch * l, d])
                    .matmul(self.v(w))
                    .add_var(self.v(b))
                    .reshape(&[batch, l, heads, dh])
                    .permute(&[0, 2, 1, 3])
            };
            let q = project(layer.q_w, layer.q_b);
            let k = project(layer.k_w, layer.k_b);
            let v = project(layer.v_w, layer.v_b);
            let scores = q
                .matmul(k.transpose(2, 3))
                .scale(1.0 / (dh as f64).sqrt())
                .softmax(3);
            let ctx = scores
                .matmul(v)
                .permute(&[0, 2, 1, 3])
                .reshape(&[batch * l, d])
                .matmul(self.v(layer.o_w))
                .add_var(self.v(layer.o_b))
                .reshape(&[batch, l, d]);
            x = x.add_var(self.maybe_dropout(ctx, mode));

            let f = x.layer_norm(self.v(layer.ln2_g), self.v(layer.ln2_b), LN_EPS);
            let ff = f
                .reshape(&[batch * l, d])
                .matmul(self.v(layer.ff1_w))
                .add_var(self.v(layer.ff1_b))
                .gelu()
                .matmul(self.v(layer.ff2_w))
                .add_var(self.v(layer.ff2_b))
                .reshape(&[batch, l, d]);
            x = x.add_var(self.maybe_dropout(ff, mode));
        }
        x.layer_norm(
            self.v(self.model.layout.final_g),
            self.v(self.model.layout.final_b),
            LN_EPS,
        )
    }

    /// Full encoder: (batch, L, n, C) -> (batch, L, d).
    pub fn encode(&self, x: Var<'t, T>, mode: &mut Mode<'_>) -> Var<'t, T> {
        let intra = self.encode_intra(x, mode);
        self.encode_context(intra, mode)
    }

    /// Decoder: (batch, L, d) -> (batch, L, n, C).
    pub fn decode(&self, h: Var<'t, T>, _mode: &mut Mode<'_>) -> Var<'t, T> {
        let cfg = &self.model.cfg;
        let shape = h.shape();
        let (batch, l, d) = (shape[0], shape[1], shape[2]);
        assert_eq!(
            (l, d),
            (cfg.seq_len, cfg.feature_dim),
            "decode: features {:?} do not match config",
            shape
        );
        let flat = batch * l;
        let c_last = *cfg.conv_channels.last().unwrap();
        let latent = cfg.latent_width();
        let mut x = h
            .reshape(&[flat, d])
            .matmul(self.v(self.model.layout.dec_proj_w))
            .add_var(self.v(self.model.layout.dec_proj_b))
            .reshape(&[flat, c_last, latent]);
        for block in &self.model.layout.dec {
            let c_out = self.v(block.w).shape()[1];
            x = x
                .conv1d_transpose(self.v(block.w), 2, 1)
                .add_var(self.v(block.b).reshape(&[c_out, 1]));
            if block.activated {
                x = x.gelu();
            }
        }
        x.permute(&[0, 2, 1])
            .reshape(&[batch, l, cfg.samples_per_epoch, cfg.channels])
    }

    /// Classifier: (batch, L, d) -> per-epoch stage probabilities (batch, L, N).
    pub fn classify(&self, h: Var<'t, T>) -> Var<'t, T> {
        let cfg = &self.model.cfg;
        let shape = h.shape();
        let (batch, l, d) = (shape[0], shape[1], shape[2]);
        assert_eq!(
            (l, d),
            (cfg.seq_len, cfg.feature_dim),
            "classify: features {:?} do not match config",
            shape
        );
        h.reshape(&[batch * l, d])
            .matmul(self.v(self.model.layout.cls_w))
            .add_var(self.v(self.model.layout.cls_b))
            .reshape(&[batch, l, cfg.num_stages])
            .softmax(2)
    }
}
