use crate::parse::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Display strings are stable: the CLI and the
/// test suites match on them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("arity conflict: predicate {pred} used with arity {prev} and arity {new}")]
    ArityConflict { pred: String, prev: u8, new: u8 },
    #[error("signature names not pairwise disjoint: {0}")]
    SignatureOverlap(String),
    #[error("formula has free variables: {0}")]
    FreeVariables(String),
    #[error("unassigned variable {0}")]
    UnassignedVariable(String),
    #[error("unknown constant {0}")]
    UnknownConstant(String),
    #[error("unknown world {0}")]
    UnknownWorld(String),
    #[error("modal operator in plain formula")]
    ModalInPlainFormula,
    #[error("non-rigid E-predicate {0}")]
    NonRigidEPredicate(String),
    #[error("closure too large: {0}")]
    ClosureTooLarge(String),
    #[error("world count not a power of two: {0}")]
    WorldCountNotPowerOfTwo(usize),
    #[error("not a stack model: {0}")]
    NotAStackModel(String),
    #[error("input not a model")]
    InputNotAModel,
    #[error("search space too large: budget of {0} candidates exhausted")]
    SearchSpaceTooLarge(u64),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("not frugal: {0}")]
    NotFrugal(String),
    #[error("not two-variable: {0}")]
    NotTwoVariable(String),
    #[error("untranslatable RIA: chain of length {0}")]
    UntranslatableRia(usize),
    #[error("irregular RIA: {0}")]
    IrregularRia(String),
    #[error("not SH-shaped: {0}")]
    NotShShaped(String),
    #[error("non-simple role in restricted position: {0}")]
    NonSimpleRole(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal check failed: {0}")]
    InternalCheck(String),
}
