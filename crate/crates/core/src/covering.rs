pub struct BlockCoverSpec;
pub struct BlockMemberId;
pub struct WClassId;
