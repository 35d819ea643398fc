pub struct SampleConfig;
pub struct VerificationReport;
