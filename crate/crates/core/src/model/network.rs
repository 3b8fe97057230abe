//! Two-branch convolutional regressor.
//!
//! Each branch is a stack of 3×3 stride-2 convolutions with ReLU, optionally
//! followed by a stride-1 refinement convolution with an identity skip.
//! The flattened features of both branches are concatenated and passed
//! through `dense(hidden) → ReLU → dense(4) → logistic`, giving the two
//! normalized centroids `(P_i, P_{i+1})`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{sample_loss, LossBreakdown, LossConfig};
use super::tensor::{downsample_input, matmul, Real};
use crate::encoder::{SamplePair, CHANNELS};
use crate::error::{Error, Result};
use crate::events::Point2;

/// Number of network outputs: two 2-D centroids.
pub const OUTPUTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    /// Output channels of each downsampling block.
    pub blocks: Vec<usize>,
    /// Adds a stride-1 convolution with an identity skip after each block.
    pub residual: bool,
    pub hidden: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            in_channels: CHANNELS,
            height: 64,
            width: 64,
            blocks: vec![8, 16, 32, 64],
            residual: false,
            hidden: 128,
        }
    }
}

impl NetworkSpec {
    pub fn with_input(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels != CHANNELS {
            return Err(Error::Config(format!("network expects {CHANNELS} input channels, spec has {}", self.in_channels)));
        }
        if self.height == 0 || self.width == 0 || self.hidden == 0 {
            return Err(Error::Config("input size and hidden width must be positive".into()));
        }
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::Config("at least one block with positive channels required".into()));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }

    /// Flattened feature length of one branch.
    pub fn feature_len(&self) -> usize {
        Layout::new(self).feature_len
    }
}

#[derive(Debug, Clone, Copy)]
struct Conv {
    in_c: usize,
    out_c: usize,
    stride: usize,
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    w_off: usize,
    b_off: usize,
}

impl Conv {
    fn k(&self) -> usize {
        self.in_c * 9
    }

    fn n(&self) -> usize {
        self.out_h * self.out_w
    }

    fn fan_in(&self) -> usize {
        self.k()
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    inputs: usize,
    outputs: usize,
    w_off: usize,
    b_off: usize,
}

#[derive(Debug, Clone)]
struct Block {
    down: Conv,
    refine: Option<Conv>,
}

#[derive(Debug, Clone)]
struct Layout {
    branches: [Vec<Block>; 2],
    hidden: Dense,
    out: Dense,
    feature_len: usize,
    total: usize,
}

impl Layout {
    fn new(spec: &NetworkSpec) -> Self {
        let mut off = 0;
        let mut take = |n: usize| {
            let o = off;
            off += n;
            o
        };
        let make_branch = |take: &mut dyn FnMut(usize) -> usize| {
            let (mut c, mut h, mut w) = (spec.in_channels, spec.height, spec.width);
            let mut blocks = Vec::new();
            for &oc in &spec.blocks {
                let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
                let mut conv = |in_c, stride, in_h, in_w| Conv {
                    in_c,
                    out_c: oc,
                    stride,
                    in_h,
                    in_w,
                    out_h: oh,
                    out_w: ow,
                    w_off: take(oc * in_c * 9),
                    b_off: take(oc),
                };
                let down = conv(c, 2, h, w);
                let refine = spec.residual.then(|| conv(oc, 1, oh, ow));
                blocks.push(Block { down, refine });
                (c, h, w) = (oc, oh, ow);
            }
            (blocks, c * h * w)
        };
        let (a, feature_len) = make_branch(&mut take);
        let (b, _) = make_branch(&mut take);
        let mut dense = |inputs, outputs| Dense {
            inputs,
            outputs,
            w_off: take(inputs * outputs),
            b_off: take(outputs),
        };
        let hidden = dense(2 * feature_len, spec.hidden);
        let out = dense(spec.hidden, OUTPUTS);
        Self {
            branches: [a, b],
            hidden,
            out,
            feature_len,
            total: off,
        }
    }
}

fn relu<R: Real>(v: &[R]) -> Vec<R> {
    v.iter().map(|&x| x.max(R::zero())).collect()
}

fn relu_mask<R: Real>(grad: &mut [R], pre: &[R]) {
    for (g, &p) in grad.iter_mut().zip(pre) {
        if p <= R::zero() {
            *g = R::zero();
        }
    }
}

fn sigmoid<R: Real>(x: R) -> R {
    R::one() / (R::one() + (-x).exp())
}

fn im2col<R: Real>(conv: &Conv, input: &[R]) -> Vec<R> {
    let n = conv.n();
    let mut col = vec![R::zero(); conv.k() * n];
    for c in 0..conv.in_c {
        let plane = &input[c * conv.in_h * conv.in_w..(c + 1) * conv.in_h * conv.in_w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[((c * 3 + ky) * 3 + kx) * n..][..n];
                for oy in 0..conv.out_h {
                    let iy = (oy * conv.stride + ky) as isize - 1;
                    if iy < 0 || iy >= conv.in_h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * conv.in_w..][..conv.in_w];
                    for ox in 0..conv.out_w {
                        let ix = (ox * conv.stride + kx) as isize - 1;
                        if ix >= 0 && ix < conv.in_w as isize {
                            row[oy * conv.out_w + ox] = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    col
}

fn col2im<R: Real>(conv: &Conv, col: &[R]) -> Vec<R> {
    let n = conv.n();
    let mut out = vec![R::zero(); conv.in_c * conv.in_h * conv.in_w];
    for c in 0..conv.in_c {
        let plane = &mut out[c * conv.in_h * conv.in_w..(c + 1) * conv.in_h * conv.in_w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &col[((c * 3 + ky) * 3 + kx) * n..][..n];
                for oy in 0..conv.out_h {
                    let iy = (oy * conv.stride + ky) as isize - 1;
                    if iy < 0 || iy >= conv.in_h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * conv.in_w..][..conv.in_w];
                    for ox in 0..conv.out_w {
                        let ix = (ox * conv.stride + kx) as isize - 1;
                        if ix >= 0 && ix < conv.in_w as isize {
                            dst[ix as usize] = dst[ix as usize] + row[oy * conv.out_w + ox];
                        }
                    }
                }
            }
        }
    }
    out
}

struct ConvCache<R> {
    col: Vec<R>,
    pre: Vec<R>,
}

fn conv_forward<R: Real>(conv: &Conv, params: &[R], input: &[R]) -> ConvCache<R> {
    let col = im2col(conv, input);
    let n = conv.n();
    let mut pre = vec![R::zero(); conv.out_c * n];
    let w = &params[conv.w_off..conv.w_off + conv.out_c * conv.k()];
    matmul(conv.out_c, conv.k(), n, w, false, &col, false, &mut pre, false);
    for (oc, row) in pre.chunks_mut(n).enumerate() {
        let b = params[conv.b_off + oc];
        row.iter_mut().for_each(|v| *v = *v + b);
    }
    ConvCache { col, pre }
}

/// Accumulates weight/bias gradients and returns the input gradient.
fn conv_backward<R: Real>(conv: &Conv, params: &[R], cache: &ConvCache<R>, dpre: &[R], grads: &mut [R]) -> Vec<R> {
    let (k, n) = (conv.k(), conv.n());
    let wlen = conv.out_c * k;
    matmul(conv.out_c, n, k, dpre, false, &cache.col, true, &mut grads[conv.w_off..conv.w_off + wlen], true);
    for (oc, row) in dpre.chunks(n).enumerate() {
        let s: R = row.iter().copied().sum();
        grads[conv.b_off + oc] = grads[conv.b_off + oc] + s;
    }
    let mut dcol = vec![R::zero(); k * n];
    matmul(k, conv.out_c, n, &params[conv.w_off..conv.w_off + wlen], true, dpre, false, &mut dcol, false);
    col2im(conv, &dcol)
}

fn dense_forward<R: Real>(d: &Dense, params: &[R], x: &[R]) -> Vec<R> {
    let mut z = params[d.b_off..d.b_off + d.outputs].to_vec();
    matmul(d.outputs, d.inputs, 1, &params[d.w_off..d.w_off + d.inputs * d.outputs], false, x, false, &mut z, true);
    z
}

fn dense_backward<R: Real>(d: &Dense, params: &[R], x: &[R], dz: &[R], grads: &mut [R]) -> Vec<R> {
    let wlen = d.inputs * d.outputs;
    matmul(d.outputs, 1, d.inputs, dz, false, x, false, &mut grads[d.w_off..d.w_off + wlen], true);
    for (g, &v) in grads[d.b_off..d.b_off + d.outputs].iter_mut().zip(dz) {
        *g = *g + v;
    }
    let mut dx = vec![R::zero(); d.inputs];
    matmul(d.inputs, d.outputs, 1, &params[d.w_off..d.w_off + wlen], true, dz, false, &mut dx, false);
    dx
}

struct BlockCache<R> {
    down: ConvCache<R>,
    refine: Option<ConvCache<R>>,
}

struct BranchCache<R> {
    blocks: Vec<BlockCache<R>>,
}

struct Cache<R> {
    branches: [BranchCache<R>; 2],
    features: Vec<R>,
    hidden_pre: Vec<R>,
    hidden: Vec<R>,
    out: [R; OUTPUTS],
}

/// Network parameters plus the `NetworkSpec` they were built for.
#[derive(Debug, Clone)]
pub struct Network<R> {
    spec: NetworkSpec,
    layout: Layout,
    pub params: Vec<R>,
}

impl<R: PartialEq> PartialEq for Network<R> {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.params == other.params
    }
}

impl<R: Real> Network<R> {
    /// All parameters zero.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let layout = Layout::new(&spec);
        Ok(Self {
            params: vec![R::zero(); layout.total],
            spec,
            layout,
        })
    }

    /// He-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        let layout = net.layout.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |off: usize, len: usize, fan_in: usize, params: &mut [R]| {
            let bound = (6.0 / fan_in as f64).sqrt();
            for p in &mut params[off..off + len] {
                *p = R::of(rng.random_range(-bound..bound));
            }
        };
        for branch in &layout.branches {
            for block in branch {
                for conv in std::iter::once(&block.down).chain(block.refine.as_ref()) {
                    fill(conv.w_off, conv.out_c * conv.k(), conv.fan_in(), &mut net.params);
                }
            }
        }
        for d in [&layout.hidden, &layout.out] {
            fill(d.w_off, d.inputs * d.outputs, d.inputs, &mut net.params);
        }
        Ok(net)
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<R>) -> Result<Self> {
        spec.validate()?;
        let layout = Layout::new(&spec);
        if params.len() != layout.total {
            return Err(Error::Shape(format!("spec needs {} parameters, got {}", layout.total, params.len())));
        }
        Ok(Self { spec, layout, params })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    fn check_input(&self, x: &[R]) -> Result<()> {
        if x.len() != self.spec.input_len() {
            return Err(Error::Shape(format!(
                "input has {} values, spec {}x{}x{} needs {}",
                x.len(),
                self.spec.in_channels,
                self.spec.height,
                self.spec.width,
                self.spec.input_len()
            )));
        }
        Ok(())
    }

    fn branch_forward(&self, blocks: &[Block], input: &[R]) -> (BranchCache<R>, Vec<R>) {
        let mut x = input.to_vec();
        let mut caches = Vec::with_capacity(blocks.len());
        for block in blocks {
            let down = conv_forward(&block.down, &self.params, &x);
            let h = relu(&down.pre);
            let (refine, out) = match &block.refine {
                Some(conv) => {
                    let c = conv_forward(conv, &self.params, &h);
                    let out = h.iter().zip(&c.pre).map(|(&a, &b)| a + b.max(R::zero())).collect();
                    (Some(c), out)
                }
                None => (None, h),
            };
            caches.push(BlockCache { down, refine });
            x = out;
        }
        (BranchCache { blocks: caches }, x)
    }

    fn branch_backward(&self, blocks: &[Block], cache: &BranchCache<R>, dout: Vec<R>, grads: &mut [R]) {
        let mut d = dout;
        for (block, bc) in blocks.iter().zip(&cache.blocks).rev() {
            if let (Some(conv), Some(rc)) = (&block.refine, &bc.refine) {
                let mut dpre = d.clone();
                relu_mask(&mut dpre, &rc.pre);
                let dh = conv_backward(conv, &self.params, rc, &dpre, grads);
                d.iter_mut().zip(dh).for_each(|(a, b)| *a = *a + b);
            }
            relu_mask(&mut d, &bc.down.pre);
            d = conv_backward(&block.down, &self.params, &bc.down, &d, grads);
        }
    }

    fn forward_cached(&self, a: &[R], b: &[R]) -> Result<Cache<R>> {
        self.check_input(a)?;
        self.check_input(b)?;
        let layout = &self.layout;
        let (ca, fa) = self.branch_forward(&layout.branches[0], a);
        let (cb, fb) = self.branch_forward(&layout.branches[1], b);
        let mut features = fa;
        features.extend_from_slice(&fb);
        let hidden_pre = dense_forward(&layout.hidden, &self.params, &features);
        let hidden = relu(&hidden_pre);
        let z = dense_forward(&layout.out, &self.params, &hidden);
        let out = std::array::from_fn(|i| sigmoid(z[i]));
        Ok(Cache {
            branches: [ca, cb],
            features,
            hidden_pre,
            hidden,
            out,
        })
    }

    /// Logistic outputs `[P_i.x, P_i.y, P_{i+1}.x, P_{i+1}.y]` in `(0, 1)`.
    pub fn forward(&self, a: &[R], b: &[R]) -> Result<[R; OUTPUTS]> {
        Ok(self.forward_cached(a, b)?.out)
    }

    /// Backpropagates `dout` (gradient w.r.t. the logistic outputs),
    /// accumulating into `grads`.
    fn backward(&self, cache: &Cache<R>, dout: [R; OUTPUTS], grads: &mut [R]) {
        let layout = &self.layout;
        let dz: Vec<R> = (0..OUTPUTS)
            .map(|i| dout[i] * cache.out[i] * (R::one() - cache.out[i]))
            .collect();
        let mut dh = dense_backward(&layout.out, &self.params, &cache.hidden, &dz, grads);
        relu_mask(&mut dh, &cache.hidden_pre);
        let dfeat = dense_backward(&layout.hidden, &self.params, &cache.features, &dh, grads);
        let (da, db) = dfeat.split_at(layout.feature_len);
        self.branch_backward(&layout.branches[0], &cache.branches[0], da.to_vec(), grads);
        self.branch_backward(&layout.branches[1], &cache.branches[1], db.to_vec(), grads);
    }

    /// Mean loss over the batch and its gradient w.r.t. every parameter.
    /// Samples are processed in order, so the result is deterministic.
    pub fn loss_and_grad(&self, batch: &[BatchItem<'_, R>], loss: &LossConfig) -> Result<(LossBreakdown, Vec<R>)> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("loss_and_grad batch".into()));
        }
        let mut grads = vec![R::zero(); self.param_count()];
        let mut total = LossBreakdown::default();
        let scale = 1.0 / batch.len() as f64;
        for item in batch {
            let cache = self.forward_cached(item.a, item.b)?;
            let pred = outputs_to_points(&cache.out);
            let (l, g) = sample_loss(&item.target, &pred, loss);
            total.accumulate(&l, scale);
            let dout = std::array::from_fn(|i| R::of(g[i] * scale));
            self.backward(&cache, dout, &mut grads);
        }
        Ok((total, grads))
    }

    /// Mean loss over the batch without gradients.
    pub fn loss(&self, batch: &[BatchItem<'_, R>], loss: &LossConfig) -> Result<LossBreakdown> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("loss batch".into()));
        }
        let mut total = LossBreakdown::default();
        let scale = 1.0 / batch.len() as f64;
        for item in batch {
            let pred = outputs_to_points(&self.forward(item.a, item.b)?);
            total.accumulate(&sample_loss(&item.target, &pred, loss).0, scale);
        }
        Ok(total)
    }

    /// Normalized centroid pair for two prepared inputs.
    pub fn predict(&self, a: &[R], b: &[R]) -> Result<[Point2; 2]> {
        Ok(outputs_to_points(&self.forward(a, b)?))
    }

    /// Downsamples the pair's frames to the network input size and predicts.
    pub fn predict_pair(&self, pair: &SamplePair) -> Result<[Point2; 2]> {
        let a = prepare_input::<R>(&pair.frame_a, &self.spec)?;
        let b = prepare_input::<R>(&pair.frame_b, &self.spec)?;
        self.predict(&a, &b)
    }
}

pub fn outputs_to_points<R: Real>(out: &[R; OUTPUTS]) -> [Point2; 2] {
    [
        Point2::new(out[0].f64(), out[1].f64()),
        Point2::new(out[2].f64(), out[3].f64()),
    ]
}

/// One training example as borrowed network inputs plus normalized target.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a, R> {
    pub a: &'a [R],
    pub b: &'a [R],
    pub target: [Point2; 2],
}

/// Downsampled, type-converted input for one encoded frame.
pub fn prepare_input<R: Real>(frame: &crate::encoder::EncodedFrame, spec: &NetworkSpec) -> Result<Vec<R>> {
    let t = downsample_input(frame, (spec.height, spec.width))?;
    Ok(t.data.into_iter().map(|v| R::of(f64::from(v))).collect())
}

/// A sample pair with both frames already prepared for the network.
#[derive(Debug, Clone)]
pub struct Sample<R> {
    pub a: Arc<Vec<R>>,
    pub b: Arc<Vec<R>>,
    pub target: [Point2; 2],
}

impl<R> Sample<R> {
    pub fn item(&self) -> BatchItem<'_, R> {
        BatchItem {
            a: &self.a,
            b: &self.b,
            target: self.target,
        }
    }
}

/// Prepares every distinct frame once and shares it between the pairs using it.
pub fn prepare_samples<R: Real>(pairs: &[SamplePair], spec: &NetworkSpec) -> Result<Vec<Sample<R>>> {
    let (frames, idx) = crate::dataset::unique_frames(pairs);
    let inputs = frames
        .iter()
        .map(|f| prepare_input::<R>(f, spec).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs
        .iter()
        .zip(idx)
        .map(|(p, (ia, ib))| Sample {
            a: Arc::clone(&inputs[ia]),
            b: Arc::clone(&inputs[ib]),
            target: p.target,
        })
        .collect())
}
