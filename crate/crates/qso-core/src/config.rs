/// Resource limits shared by the evaluator, the rewriters and the Horn reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    /// Maximum number of subsets a single second-order quantifier may enumerate.
    pub subset_budget: u64,
    /// Maximum number of disjuncts produced by DNF conversion.
    pub dnf_limit: usize,
    /// Maximum number of variables handed to weak-ordering enumeration.
    pub weak_order_limit: usize,
    /// Maximum number of grounded clause instances in the Horn reduction.
    pub ground_budget: u64,
    /// Maximum number of nodes in a path graph or entries in an lsfp table.
    pub table_limit: usize,
    /// Accept negative constants.
    pub integers: bool,
    /// Seed for the random generators used by tests and tooling.
    pub seed: u64,
}

pub const DEFAULT_SUBSET_BUDGET: u64 = 1 << 24;

impl Default for Config {
    fn default() -> Self {
        Config {
            subset_budget: DEFAULT_SUBSET_BUDGET,
            dnf_limit: 4096,
            weak_order_limit: 6,
            ground_budget: 1 << 22,
            table_limit: 1 << 12,
            integers: false,
            seed: 0x5eed,
        }
    }
}

impl Config {
    /// Default configuration with `QSO_BUDGET` applied when set to a positive integer.
    pub fn from_env() -> Self {
        let mut c = Config::default();
        if let Some(b) = std::env::var("QSO_BUDGET")
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .filter(|&b| b > 0)
        {
            c.subset_budget = b;
        }
        c
    }

    /// Checks that 2^(n^k) subsets fit the subset budget.
    pub fn check_subsets(&self, n: usize, k: usize) -> crate::Result<()> {
        let tuples = (n as u128).checked_pow(k as u32);
        let ok = match tuples {
            Some(t) if t < 64 => (1u128 << t) <= self.subset_budget as u128,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(crate::QsoError::Budget(format!(
                "2^({n}^{k}) subsets exceed the limit of {}",
                self.subset_budget
            )))
        }
    }
}
