use std::sync::OnceLock;

use crate::fundamental::FundamentalSolution;
use crate::grid::RadialGrid;
use crate::order::FracOrder;
use crate::profile::build_profile_on;

/// `alpha = 1/2` solution on a 4000-node graded table, shared across tests.
pub(crate) fn half_order_solution() -> &'static FundamentalSolution {
    static FS: OnceLock<FundamentalSolution> = OnceLock::new();
    FS.get_or_init(|| {
        let o = FracOrder::new(0.5).unwrap();
        let grid = RadialGrid::graded(20.0, 4000, 2.0).unwrap();
        let p = build_profile_on(o, grid, 1e-8).unwrap();
        FundamentalSolution::new(p, 1e-5).unwrap()
    })
}
