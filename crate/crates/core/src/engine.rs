//! The evolution loop: seed the binary level-set function, then repeat
//! update / reinitialize / Gaussian-regularize until the extracted mask
//! stops changing.
//!
//! Per iteration `n` (counted from zero):
//!
//! 1. `v = R(phi)` for the selected model,
//! 2. `phi += dt * v`,
//! 3. if `reinit_period > 0` and `n % reinit_period == 0`, reinitialize
//!    (binarize; the Chan-Vese baseline recomputes a signed distance),
//! 4. if `n % reg_period == 0`, convolve `phi` with the regularization
//!    Gaussian (skipped for Chan-Vese, which has its own curvature term).
//!
//! Convergence is checked every `conv_check_every` iterations: the run stops
//! once `conv_window` consecutive checkpoint masks are identical.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{extract_contours, Polyline};
use crate::grid::{binarize, rasterize_seeds, BinaryMask, GridError, RegionMeans, ScalarField, SeedSpec, Sign};
use crate::kernels::{convolve_same, gaussian_kernel, signed_distance, Kernel2D, KernelError};
use crate::models::{cv_velocity, edge_function, edge_velocity, region_velocity, zhang_velocity, ModelKind, ModelParams, Velocity};

/// Time steps above this may evolve unstably.
pub const STABLE_DT_LIMIT: f64 = 25.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("image is {image_w}x{image_h} but the level-set function is {phi_w}x{phi_h}")]
    ShapeMismatch {
        image_w: usize,
        image_h: usize,
        phi_w: usize,
        phi_h: usize,
    },
    #[error("numerical instability at iteration {iteration}: non-finite level-set value at pixel ({x}, {y})")]
    Instability { iteration: usize, x: usize, y: usize },
    #[error(transparent)]
    Seed(#[from] GridError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub model: ModelKind,
    pub model_params: ModelParams,
    pub dt: f64,
    /// Regularization Gaussian scale (the only scale of the region model).
    pub sigma2: f64,
    pub ts_reg: usize,
    /// 0 disables reinitialization.
    pub reinit_period: usize,
    pub reg_period: usize,
    pub max_iters: usize,
    pub conv_check_every: usize,
    pub conv_window: usize,
}

impl EvolutionParams {
    /// Defaults: `dt = 15`, `sigma = 1`, 9x9 templates for the fast models;
    /// `dt = 0.8`, `mu = 0.1` for Chan-Vese.
    pub fn for_model(model: ModelKind) -> Self {
        let base = Self {
            model,
            model_params: ModelParams::default(),
            dt: 15.0,
            sigma2: 1.0,
            ts_reg: 9,
            reinit_period: 1,
            reg_period: 1,
            max_iters: 1000,
            conv_check_every: 10,
            conv_window: 3,
        };
        match model {
            ModelKind::ChanVese => Self {
                dt: 0.8,
                reinit_period: 20,
                ..base
            },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidParams(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.reg_period == 0 {
            return bad("reg_period must be at least 1".into());
        }
        if self.conv_check_every == 0 || self.conv_window == 0 {
            return bad("conv_check_every and conv_window must be at least 1".into());
        }
        if self.model == ModelKind::Edge && self.reinit_period == 0 {
            return bad("the edge model needs reinit_period >= 1".into());
        }
        if self.model != ModelKind::ChanVese {
            gaussian_kernel(self.sigma2, self.ts_reg)?;
        }
        if self.model == ModelKind::Edge {
            let mp = &self.model_params;
            gaussian_kernel(mp.sigma1, mp.ts_pre)?;
            if !(mp.edge_scale > 0.0 && mp.edge_scale.is_finite()) {
                return bad(format!("edge_scale must be positive, got {}", mp.edge_scale));
            }
        }
        if self.model == ModelKind::ChanVese && (self.model_params.mu.is_nan() || self.model_params.mu < 0.0) {
            return bad(format!("mu must be non-negative, got {}", self.model_params.mu));
        }
        if self.model == ModelKind::Zhang && !self.model_params.nu.is_finite() {
            return bad("nu must be finite".into());
        }
        Ok(())
    }

    /// Non-fatal parameter concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dt > STABLE_DT_LIMIT {
            out.push(format!(
                "time step {} exceeds {STABLE_DT_LIMIT}; the evolution may be unstable",
                self.dt
            ));
        }
        out
    }
}

/// Optional replacements for the per-model defaults. `ts` sets both the
/// pre-smoothing and the regularization template.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamOverrides {
    pub dt: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub ts: Option<usize>,
    pub reinit_period: Option<usize>,
    pub reg_period: Option<usize>,
    pub max_iters: Option<usize>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub edge_scale: Option<f64>,
}

impl ParamOverrides {
    pub fn apply(&self, model: ModelKind) -> EvolutionParams {
        let mut p = EvolutionParams::for_model(model);
        let mp = &mut p.model_params;
        if let Some(ts) = self.ts {
            p.ts_reg = ts;
            mp.ts_pre = ts;
        }
        macro_rules! set {
            ($($src:ident => $dst:expr),*) => {
                $(if let Some(v) = self.$src { $dst = v; })*
            };
        }
        set!(sigma1 => mp.sigma1, mu => mp.mu, nu => mp.nu, edge_scale => mp.edge_scale);
        set!(dt => p.dt, sigma2 => p.sigma2, reinit_period => p.reinit_period,
             reg_period => p.reg_period, max_iters => p.max_iters);
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub phi: ScalarField,
    pub iter: usize,
    pub converged: bool,
    pub degenerate: bool,
    /// Region means seen by the last velocity evaluation.
    pub means: Option<RegionMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub iter: usize,
    pub contours: Vec<Polyline>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub mask: BinaryMask,
    /// Level-set sign that was mapped to "object".
    pub object_sign: Sign,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    pub wall_time: f64,
    pub trace: Option<Vec<TraceFrame>>,
}

/// Image-dependent data reused across iterations.
#[derive(Debug, Clone)]
struct StepContext {
    edge_g: Option<ScalarField>,
    reg_kernel: Option<Kernel2D>,
}

impl StepContext {
    fn new(image: &ScalarField, params: &EvolutionParams) -> Result<Self, EngineError> {
        params.validate()?;
        let edge_g = match params.model {
            ModelKind::Edge => {
                let mp = &params.model_params;
                Some(edge_function(image, mp.sigma1, mp.ts_pre, mp.edge_scale)?)
            }
            _ => None,
        };
        let reg_kernel = match params.model {
            ModelKind::ChanVese => None,
            _ => Some(gaussian_kernel(params.sigma2, params.ts_reg)?),
        };
        Ok(Self { edge_g, reg_kernel })
    }
}

fn check_shape(image: &ScalarField, phi: &ScalarField) -> Result<(), EngineError> {
    if image.dims() != phi.dims() {
        return Err(EngineError::ShapeMismatch {
            image_w: image.width(),
            image_h: image.height(),
            phi_w: phi.width(),
            phi_h: phi.height(),
        });
    }
    Ok(())
}

/// Initial state: the binary seed function, or for Chan-Vese a signed
/// distance whose seeded side carries `inside_sign`.
pub fn init_state(
    image: &ScalarField,
    seeds: &SeedSpec,
    params: &EvolutionParams,
) -> Result<EvolutionState, EngineError> {
    params.validate()?;
    let (w, h) = image.dims();
    let phi = rasterize_seeds(seeds, w, h)?;
    let phi = match params.model {
        ModelKind::ChanVese => {
            let seeded = seeds.region_mask(w, h)?;
            // signed_distance is negative inside the mask
            let flip = -seeds.inside_sign.value();
            signed_distance(&seeded)?.map(|d| d * flip)
        }
        _ => phi,
    };
    Ok(EvolutionState {
        phi,
        iter: 0,
        converged: false,
        degenerate: false,
        means: None,
    })
}

fn velocity(
    image: &ScalarField,
    phi: &ScalarField,
    params: &EvolutionParams,
    ctx: &StepContext,
) -> Result<Velocity, EngineError> {
    let mp = &params.model_params;
    Ok(match params.model {
        ModelKind::Edge => {
            let g = ctx.edge_g.as_ref().expect("edge context");
            Velocity {
                field: edge_velocity(g, phi)?,
                degenerate: false,
                means: None,
            }
        }
        ModelKind::Region => region_velocity(image, phi)?,
        ModelKind::ChanVese => cv_velocity(image, phi, mp.mu)?,
        ModelKind::Zhang => zhang_velocity(image, phi, mp.nu)?,
    })
}

fn step_with(
    state: &EvolutionState,
    image: &ScalarField,
    params: &EvolutionParams,
    ctx: &StepContext,
) -> Result<EvolutionState, EngineError> {
    check_shape(image, &state.phi)?;
    let n = state.iter;
    let v = velocity(image, &state.phi, params, ctx)?;
    let dt = params.dt;
    let updated = state.phi.zip_map(&v.field, |p, s| p + dt * s)?;
    if let Some((x, y)) = updated.first_non_finite() {
        return Err(EngineError::Instability {
            iteration: n + 1,
            x,
            y,
        });
    }
    let mut degenerate = v.degenerate;
    let mut phi = updated;

    if params.reinit_period > 0 && n.is_multiple_of(params.reinit_period) {
        phi = match params.model {
            ModelKind::ChanVese => {
                let negative = BinaryMask::from_sign(&phi, Sign::Negative);
                match signed_distance(&negative) {
                    Ok(sd) => sd,
                    Err(KernelError::SingleClassMask) => {
                        degenerate = true;
                        binarize(&phi)
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            _ => binarize(&phi),
        };
    }
    if let Some(k) = &ctx.reg_kernel {
        if n.is_multiple_of(params.reg_period) {
            phi = convolve_same(&phi, k);
        }
    }

    Ok(EvolutionState {
        phi,
        iter: n + 1,
        converged: false,
        degenerate,
        means: v.means,
    })
}

/// One iteration. Recomputes image-dependent terms on every call; use
/// [`Evolution`] for repeated stepping.
pub fn step(
    state: &EvolutionState,
    image: &ScalarField,
    params: &EvolutionParams,
) -> Result<EvolutionState, EngineError> {
    let ctx = StepContext::new(image, params)?;
    step_with(state, image, params, &ctx)
}

/// An evolution in progress. Owns its image, parameters and state, and can
/// be advanced incrementally; [`run`] is `Evolution::new(..).advance(max)`.
#[derive(Debug, Clone)]
pub struct Evolution {
    image: ScalarField,
    params: EvolutionParams,
    inside_sign: Sign,
    ctx: StepContext,
    state: EvolutionState,
    last_checkpoint: Option<BinaryMask>,
    streak: usize,
    trace: Option<Vec<TraceFrame>>,
    elapsed: f64,
}

impl Evolution {
    pub fn new(image: ScalarField, seeds: &SeedSpec, params: EvolutionParams) -> Result<Self, EngineError> {
        let state = init_state(&image, seeds, &params)?;
        let ctx = StepContext::new(&image, &params)?;
        let mut evo = Self {
            image,
            params,
            inside_sign: seeds.inside_sign,
            ctx,
            state,
            last_checkpoint: None,
            streak: 0,
            trace: None,
            elapsed: 0.0,
        };
        evo.checkpoint();
        Ok(evo)
    }

    /// Records the zero level curve at every checkpoint from now on,
    /// starting with the current state.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(vec![TraceFrame {
            iter: self.state.iter,
            contours: extract_contours(&self.state.phi),
        }]);
        self
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    pub fn image(&self) -> &ScalarField {
        &self.image
    }

    pub fn state(&self) -> &EvolutionState {
        &self.state
    }

    pub fn inside_sign(&self) -> Sign {
        self.inside_sign
    }

    pub fn trace(&self) -> Option<&[TraceFrame]> {
        self.trace.as_deref()
    }

    /// Seconds spent inside [`Evolution::advance`].
    pub fn wall_time(&self) -> f64 {
        self.elapsed
    }

    /// Converged, degenerate, or out of iterations.
    pub fn is_finished(&self) -> bool {
        self.state.converged || self.state.iter >= self.params.max_iters
    }

    /// Current object mask.
    pub fn mask(&self) -> BinaryMask {
        BinaryMask::from_sign(&self.state.phi, self.inside_sign)
    }

    fn checkpoint(&mut self) {
        let mask = self.mask();
        if self.last_checkpoint.as_ref() == Some(&mask) {
            self.streak += 1;
        } else {
            self.streak = 1;
            self.last_checkpoint = Some(mask);
        }
        if self.streak >= self.params.conv_window {
            self.state.converged = true;
        }
    }

    /// Runs up to `n` more iterations, stopping early on convergence,
    /// degeneracy or `max_iters`. Returns the number of iterations taken.
    /// On error the state is left at the last good iteration.
    pub fn advance(&mut self, n: usize) -> Result<usize, EngineError> {
        let start = Instant::now();
        let mut taken = 0;
        let result = loop {
            if taken == n || self.is_finished() {
                break Ok(taken);
            }
            let next = match step_with(&self.state, &self.image, &self.params, &self.ctx) {
                Ok(s) => s,
                Err(e) => break Err(e),
            };
            self.state = next;
            taken += 1;
            if self.state.degenerate {
                self.state.converged = true;
            } else if self.state.iter.is_multiple_of(self.params.conv_check_every) {
                self.checkpoint();
            }
            if self.trace.is_some()
                && (self.state.iter.is_multiple_of(self.params.conv_check_every) || self.is_finished())
            {
                let frame = TraceFrame {
                    iter: self.state.iter,
                    contours: extract_contours(&self.state.phi),
                };
                if let Some(t) = self.trace.as_mut() {
                    if t.last().map(|f| f.iter) != Some(frame.iter) {
                        t.push(frame);
                    }
                }
            }
        };
        self.elapsed += start.elapsed().as_secs_f64();
        result
    }

    pub fn into_result(self) -> ExtractionResult {
        ExtractionResult {
            mask: self.mask(),
            object_sign: self.inside_sign,
            iterations: self.state.iter,
            converged: self.state.converged,
            degenerate: self.state.degenerate,
            wall_time: self.elapsed,
            trace: self.trace,
        }
    }
}

/// Evolves from the seeds until convergence or `max_iters`.
pub fn run(
    image: &ScalarField,
    seeds: &SeedSpec,
    params: &EvolutionParams,
) -> Result<ExtractionResult, EngineError> {
    run_inner(image, seeds, params, false)
}

/// Like [`run`], also recording the zero level curve at each checkpoint.
pub fn run_traced(
    image: &ScalarField,
    seeds: &SeedSpec,
    params: &EvolutionParams,
) -> Result<ExtractionResult, EngineError> {
    run_inner(image, seeds, params, true)
}

fn run_inner(
    image: &ScalarField,
    seeds: &SeedSpec,
    params: &EvolutionParams,
    traced: bool,
) -> Result<ExtractionResult, EngineError> {
    let start = Instant::now();
    let mut evo = Evolution::new(image.clone(), seeds, *params)?;
    if traced {
        evo = evo.with_trace();
    }
    evo.advance(params.max_iters)?;
    let mut result = evo.into_result();
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}
