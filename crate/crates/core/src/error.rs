use thiserror::Error;

/// Every failure the library can report. `code()` gives a stable
/// upper-case tag used by the CLI and the C interface.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole: {0}")]
    Pole(String),
    #[error("argument on branch cut: {0}")]
    BranchCut(String),
    #[error("argument at branch point: {0}")]
    BranchPoint(String),
    #[error("strip condition violated: {0}")]
    StripViolation(String),
    #[error("integrand pole too close to contour: {0}")]
    PoleNearContour(String),
    #[error("jump factor vanishes: {0}")]
    PoleHit(String),
    #[error("non-integer exponent {0}")]
    NonIntegerBranch(String),
    #[error("sector boundary ray is active: {0}")]
    BoundaryActive(String),
    #[error("no active classes")]
    NoActiveClasses,
    #[error("no class survives cutoff {0}")]
    CutoffTooSmall(f64),
    #[error("finiteness cannot be decided: {0}")]
    FinitenessUndecidable(String),
    #[error("structure is not uncoupled")]
    NotUncoupled,
    #[error("structure is not finite")]
    NotFinite,
    #[error("ill-conditioned linear solve: {0}")]
    IllConditioned(String),
    #[error("active class with zero central charge")]
    ZeroCentralCharge,
    #[error("degenerate form")]
    DegenerateForm,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("point is not tame: {0}")]
    NotTame(String),
    #[error("point lies on the discriminant")]
    OnDiscriminant,
    #[error("roots collide")]
    RootCollision,
    #[error("central charges lie on a wall")]
    Wall,
    #[error("q lies on an integration cycle")]
    QOnCycle,
    #[error("p vanishes")]
    PZero,
    #[error("singular Jacobian: {0}")]
    JacobianSingular(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("region not supported: {0}")]
    RegionUnsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Pole(_) => "POLE",
            Error::BranchCut(_) => "BRANCH_CUT",
            Error::BranchPoint(_) => "BRANCH_POINT",
            Error::StripViolation(_) => "STRIP_VIOLATION",
            Error::PoleNearContour(_) => "POLE_NEAR_CONTOUR",
            Error::PoleHit(_) => "POLE_HIT",
            Error::NonIntegerBranch(_) => "NONINTEGER_BRANCH",
            Error::BoundaryActive(_) => "BOUNDARY_ACTIVE",
            Error::NoActiveClasses => "NO_ACTIVE_CLASSES",
            Error::CutoffTooSmall(_) => "CUTOFF_TOO_SMALL",
            Error::FinitenessUndecidable(_) => "FINITENESS_UNDECIDABLE",
            Error::NotUncoupled => "NOT_UNCOUPLED",
            Error::NotFinite => "NOT_FINITE",
            Error::IllConditioned(_) => "ILL_CONDITIONED",
            Error::ZeroCentralCharge => "ZERO_CENTRAL_CHARGE",
            Error::DegenerateForm => "DEGENERATE_FORM",
            Error::Dimension(_) => "DIMENSION",
            Error::NotTame(_) => "NOT_TAME",
            Error::OnDiscriminant => "ON_DISCRIMINANT",
            Error::RootCollision => "ROOT_COLLISION",
            Error::Wall => "WALL",
            Error::QOnCycle => "Q_ON_CYCLE",
            Error::PZero => "P_ZERO",
            Error::JacobianSingular(_) => "JACOBIAN_SINGULAR",
            Error::NewtonDiverged(_) => "NEWTON_DIVERGED",
            Error::RegionUnsupported(_) => "REGION_UNSUPPORTED",
            Error::InvalidInput(_) => "INVALID_INPUT",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
