use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field of order {0} is too small: q must be at least 3")]
    FieldTooSmall(u64),
    #[error("field of order {q} exceeds the table cap of {cap} elements")]
    FieldTooLarge { q: u64, cap: u64 },
    #[error("no irreducible polynomial of degree {r} found over F_{p}")]
    SearchExhausted { p: u32, r: u32 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("division by zero in F_q")]
    DivisionByZero,
    #[error("multiplicative characters are not defined at 0")]
    EvalAtZero,
    #[error("subset size {size} out of range 1..={max}")]
    SizeOutOfRange { size: usize, max: usize },
    #[error("invalid character index {index} for q = {q}")]
    InvalidCharacter { index: u32, q: u32 },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("product of the characters is trivial; use the direct Jacobi sum")]
    ProductTrivial,
    #[error("a character in the tuple is trivial")]
    TrivialCharacter,
    #[error("Kloosterman sums need a nonzero argument")]
    ZeroArgument,
    #[error("precision cap exceeded: {0}")]
    PrecisionCapExceeded(String),
    #[error("twisted moment sum needs a nontrivial character")]
    TrivialTwist,
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
    #[error("point {index} has modulus {modulus}, not on the unit circle")]
    NotOnCircle { index: usize, modulus: f64 },
    #[error("family has {count} tuples, over the budget of {cap}")]
    TupleBudgetExceeded { count: u128, cap: u128 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no monodromy group listed for p = {p}, n = {n}")]
    Unclassified { p: u64, n: u32 },
    #[error("k = {k} is not congruent to 1 mod n = {n}")]
    CongruenceViolated { n: u32, k: u32 },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
