pub struct ExtendedComponent;
pub struct FinalClassId;
