//! Per-iteration flop model of the three solver variants.

/// Iteration costs for an `N × K` problem. All counts are exact integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopModel {
    pub n: u64,
    pub k: u64,
}

impl FlopModel {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n: n as u64, k: k as u64 }
    }

    /// No screening: `(K + ‖x‖₀)N + 4K + N`.
    pub fn plain(&self, nnz: usize) -> u64 {
        (self.k + nnz as u64) * self.n + 4 * self.k + self.n
    }

    /// Conventional screening on `A`: `(|𝒜| + ‖x‖₀)N + 6|𝒜| + 5N`.
    pub fn screened(&self, active: usize, nnz: usize) -> u64 {
        let a = active as u64;
        (a + nnz as u64) * self.n + 6 * a + 5 * self.n
    }

    /// Stable screening on an approximation whose product costs
    /// `complexity_cost = RC·N·K`: `RC·K·N + ‖x‖₀N + 8|𝒜| + 7N`.
    pub fn approximate(&self, complexity_cost: u64, active: usize, nnz: usize) -> u64 {
        complexity_cost + nnz as u64 * self.n + 8 * active as u64 + 7 * self.n
    }

    /// Gap check on the full dictionary at a candidate stop: correlations of
    /// the screened atoms, their maximum and the rescaled dual value,
    /// `(K − |𝒜|)(N + 1) + 2N`.
    pub fn certify(&self, active: usize) -> u64 {
        (self.k - active as u64) * (self.n + 1) + 2 * self.n
    }
}

/// Running flop total of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopLedger {
    pub model: FlopModel,
    pub total: u64,
}

impl FlopLedger {
    pub fn new(model: FlopModel) -> Self {
        Self { model, total: 0 }
    }

    /// Add one iteration's cost and return the new total.
    pub fn charge(&mut self, flops: u64) -> u64 {
        self.total += flops;
        self.total
    }
}
