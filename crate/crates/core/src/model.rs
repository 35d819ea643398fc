pub struct BlockPath;
pub struct Model;
pub struct ModelConfig;
pub struct ModelPoint;
pub struct PlaneRef;
