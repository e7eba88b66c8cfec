use crate::error::{Error, Result};

/// Uniform time grid on `[t0, t_end]` with `n_steps` steps.
///
/// Node `i` sits at `t0 + i * dt`; there are `n_steps + 1` nodes. Series that
/// live "on the grid" are node-aligned unless documented otherwise (Brownian
/// increments are step-aligned, one per cell).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
    dt: f64,
}

impl DiscreteGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t0.is_finite()) || t_end <= t0 {
            return Err(Error::Parameter(format!(
                "grid needs t_end > t0, got [{t0}, {t_end}]"
            )));
        }
        if n_steps == 0 {
            return Err(Error::Parameter("grid needs n_steps >= 1".into()));
        }
        let dt = (t_end - t0) / n_steps as f64;
        Ok(Self { t0, t_end, n_steps, dt })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn node(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Elapsed time from the grid origin to node `i`.
    pub fn elapsed(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|i| self.node(i))
    }

    /// Index of the node closest to `t`; errors when `t` is off-grid by more
    /// than a small tolerance.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt;
        let i = x.round();
        if i < 0.0 || i > self.n_steps as f64 || (x - i).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "t = {t} is not a node of the grid [{}, {}] with dt = {}",
                self.t0, self.t_end, self.dt
            )));
        }
        Ok(i as usize)
    }

    /// Sub-grid starting at node `offset` with the same step.
    pub fn window(&self, offset: usize, n_steps: usize) -> Result<DiscreteGrid> {
        if offset + n_steps > self.n_steps {
            return Err(Error::Resolution(format!(
                "window [{offset}, {}] exceeds grid with {} steps",
                offset + n_steps,
                self.n_steps
            )));
        }
        DiscreteGrid::new(self.node(offset), self.node(offset + n_steps), n_steps)
    }

    /// Same-step refinement with `factor` times as many cells.
    pub fn refine(&self, factor: usize) -> Result<DiscreteGrid> {
        DiscreteGrid::new(self.t0, self.t_end, self.n_steps * factor.max(1))
    }
}
