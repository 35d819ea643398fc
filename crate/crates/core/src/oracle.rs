pub struct ConvexSetDescriptor;
pub struct DistanceCertificate;
