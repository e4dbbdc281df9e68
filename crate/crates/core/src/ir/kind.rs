use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IrError;

/// Supported layer catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayerKind {
    Dense,
    Conv1D,
    Conv2D,
    Conv3D,
    MaxPooling1D,
    MaxPooling2D,
    MaxPooling3D,
    AveragePooling1D,
    AveragePooling2D,
    AveragePooling3D,
    Flatten,
    Reshape,
    ZeroPadding1D,
    ZeroPadding2D,
    ZeroPadding3D,
    Cropping1D,
    Cropping2D,
    Cropping3D,
    UpSampling1D,
    UpSampling2D,
    UpSampling3D,
    Add,
    Subtract,
    Multiply,
    Average,
    Concatenate,
    ReLU,
    LeakyReLU,
    Softmax,
    Embedding,
    BatchNormalization,
    SimpleRNN,
    LSTM,
}

/// Layer groups that come in 1D/2D/3D variants sharing attribute names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpatialFamily {
    Conv,
    MaxPooling,
    AveragePooling,
    ZeroPadding,
    Cropping,
    UpSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntsLen {
    /// One entry per spatial axis.
    Spatial,
    /// A (before, after) pair per spatial axis, flattened.
    Pairs,
    /// Any non-empty length.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttrType {
    Int { min: i64 },
    Ints { len: IntsLen, min: i64 },
    Token(&'static [&'static str]),
    Float,
    Bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttrDefault {
    Required,
    Int(i64),
    Fill(i64),
    Token(&'static str),
    Float(f64),
    Bool(bool),
    /// Copy another (already normalized) attribute.
    SameAs(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttrSpec {
    pub name: &'static str,
    pub ty: AttrType,
    pub default: AttrDefault,
}

const fn spec(name: &'static str, ty: AttrType, default: AttrDefault) -> AttrSpec {
    AttrSpec { name, ty, default }
}

pub const PADDING_MODES: &[&str] = &["valid", "same"];
pub const ACTIVATIONS: &[&str] = &["linear", "relu", "sigmoid", "tanh", "softmax"];

const DENSE: &[AttrSpec] = &[
    spec("units", AttrType::Int { min: 1 }, AttrDefault::Required),
    spec(
        "activation",
        AttrType::Token(ACTIVATIONS),
        AttrDefault::Token("linear"),
    ),
];

const CONV: &[AttrSpec] = &[
    spec("filters", AttrType::Int { min: 1 }, AttrDefault::Required),
    spec(
        "kernel_size",
        AttrType::Ints {
            len: IntsLen::Spatial,
            min: 1,
        },
        AttrDefault::Required,
    ),
    spec(
        "strides",
        AttrType::Ints {
            len: IntsLen::Spatial,
            min: 1,
        },
        AttrDefault::Fill(1),
    ),
    spec(
        "dilation_rate",
        AttrType::Ints {
            len: IntsLen::Spatial,
            min: 1,
        },
        AttrDefault::Fill(1),
    ),
    spec(
        "padding",
        AttrType::Token(PADDING_MODES),
        AttrDefault::Token("valid"),
    ),
    spec(
        "activation",
        AttrType::Token(ACTIVATIONS),
        AttrDefault::Token("linear"),
    ),
];

const POOL: &[AttrSpec] = &[
    spec(
        "pool_size",
        AttrType::Ints {
            len: IntsLen::Spatial,
            min: 1,
        },
        AttrDefault::Fill(2),
    ),
    spec(
        "strides",
        AttrType::Ints {
            len: IntsLen::Spatial,
            min: 1,
        },
        AttrDefault::SameAs("pool_size"),
    ),
    spec(
        "padding",
        AttrType::Token(PADDING_MODES),
        AttrDefault::Token("valid"),
    ),
];

const RESHAPE: &[AttrSpec] = &[spec(
    "target_shape",
    AttrType::Ints {
        len: IntsLen::Free,
        min: 1,
    },
    AttrDefault::Required,
)];

const ZERO_PADDING: &[AttrSpec] = &[spec(
    "padding",
    AttrType::Ints {
        len: IntsLen::Pairs,
        min: 0,
    },
    AttrDefault::Fill(1),
)];

const CROPPING: &[AttrSpec] = &[spec(
    "cropping",
    AttrType::Ints {
        len: IntsLen::Pairs,
        min: 0,
    },
    AttrDefault::Fill(0),
)];

const UPSAMPLING: &[AttrSpec] = &[spec(
    "size",
    AttrType::Ints {
        len: IntsLen::Spatial,
        min: 1,
    },
    AttrDefault::Fill(2),
)];

const CONCATENATE: &[AttrSpec] = &[spec(
    "axis",
    AttrType::Int { min: i64::MIN },
    AttrDefault::Int(-1),
)];

const LEAKY_RELU: &[AttrSpec] = &[spec("alpha", AttrType::Float, AttrDefault::Float(0.3))];

const SOFTMAX: &[AttrSpec] = &[spec(
    "axis",
    AttrType::Int { min: i64::MIN },
    AttrDefault::Int(-1),
)];

const EMBEDDING: &[AttrSpec] = &[
    spec("input_dim", AttrType::Int { min: 1 }, AttrDefault::Required),
    spec(
        "output_dim",
        AttrType::Int { min: 1 },
        AttrDefault::Required,
    ),
];

const BATCH_NORM: &[AttrSpec] = &[
    spec(
        "axis",
        AttrType::Int { min: i64::MIN },
        AttrDefault::Int(-1),
    ),
    spec("epsilon", AttrType::Float, AttrDefault::Float(0.001)),
];

const RECURRENT: &[AttrSpec] = &[
    spec("units", AttrType::Int { min: 1 }, AttrDefault::Required),
    spec("return_sequences", AttrType::Bool, AttrDefault::Bool(false)),
];

impl LayerKind {
    pub const ALL: [LayerKind; 33] = [
        LayerKind::Dense,
        LayerKind::Conv1D,
        LayerKind::Conv2D,
        LayerKind::Conv3D,
        LayerKind::MaxPooling1D,
        LayerKind::MaxPooling2D,
        LayerKind::MaxPooling3D,
        LayerKind::AveragePooling1D,
        LayerKind::AveragePooling2D,
        LayerKind::AveragePooling3D,
        LayerKind::Flatten,
        LayerKind::Reshape,
        LayerKind::ZeroPadding1D,
        LayerKind::ZeroPadding2D,
        LayerKind::ZeroPadding3D,
        LayerKind::Cropping1D,
        LayerKind::Cropping2D,
        LayerKind::Cropping3D,
        LayerKind::UpSampling1D,
        LayerKind::UpSampling2D,
        LayerKind::UpSampling3D,
        LayerKind::Add,
        LayerKind::Subtract,
        LayerKind::Multiply,
        LayerKind::Average,
        LayerKind::Concatenate,
        LayerKind::ReLU,
        LayerKind::LeakyReLU,
        LayerKind::Softmax,
        LayerKind::Embedding,
        LayerKind::BatchNormalization,
        LayerKind::SimpleRNN,
        LayerKind::LSTM,
    ];

    pub fn name(self) -> &'static str {
        use LayerKind::*;
        match self {
            Dense => "Dense",
            Conv1D => "Conv1D",
            Conv2D => "Conv2D",
            Conv3D => "Conv3D",
            MaxPooling1D => "MaxPooling1D",
            MaxPooling2D => "MaxPooling2D",
            MaxPooling3D => "MaxPooling3D",
            AveragePooling1D => "AveragePooling1D",
            AveragePooling2D => "AveragePooling2D",
            AveragePooling3D => "AveragePooling3D",
            Flatten => "Flatten",
            Reshape => "Reshape",
            ZeroPadding1D => "ZeroPadding1D",
            ZeroPadding2D => "ZeroPadding2D",
            ZeroPadding3D => "ZeroPadding3D",
            Cropping1D => "Cropping1D",
            Cropping2D => "Cropping2D",
            Cropping3D => "Cropping3D",
            UpSampling1D => "UpSampling1D",
            UpSampling2D => "UpSampling2D",
            UpSampling3D => "UpSampling3D",
            Add => "Add",
            Subtract => "Subtract",
            Multiply => "Multiply",
            Average => "Average",
            Concatenate => "Concatenate",
            ReLU => "ReLU",
            LeakyReLU => "LeakyReLU",
            Softmax => "Softmax",
            Embedding => "Embedding",
            BatchNormalization => "BatchNormalization",
            SimpleRNN => "SimpleRNN",
            LSTM => "LSTM",
        }
    }

    /// Three-letter prefix used for generated node ids (`Con60545`).
    pub fn id_prefix(self) -> &'static str {
        &self.name()[..3]
    }

    /// Family and number of spatial axes for 1D/2D/3D layers.
    pub fn spatial(self) -> Option<(SpatialFamily, usize)> {
        use LayerKind::*;
        use SpatialFamily as F;
        Some(match self {
            Conv1D => (F::Conv, 1),
            Conv2D => (F::Conv, 2),
            Conv3D => (F::Conv, 3),
            MaxPooling1D => (F::MaxPooling, 1),
            MaxPooling2D => (F::MaxPooling, 2),
            MaxPooling3D => (F::MaxPooling, 3),
            AveragePooling1D => (F::AveragePooling, 1),
            AveragePooling2D => (F::AveragePooling, 2),
            AveragePooling3D => (F::AveragePooling, 3),
            ZeroPadding1D => (F::ZeroPadding, 1),
            ZeroPadding2D => (F::ZeroPadding, 2),
            ZeroPadding3D => (F::ZeroPadding, 3),
            Cropping1D => (F::Cropping, 1),
            Cropping2D => (F::Cropping, 2),
            Cropping3D => (F::Cropping, 3),
            UpSampling1D => (F::UpSampling, 1),
            UpSampling2D => (F::UpSampling, 2),
            UpSampling3D => (F::UpSampling, 3),
            _ => return None,
        })
    }

    pub fn spatial_rank(self) -> Option<usize> {
        self.spatial().map(|(_, n)| n)
    }

    /// The member of this kind's family with `n` spatial axes, if any.
    pub fn variant(self, n: usize) -> Option<LayerKind> {
        let (family, _) = self.spatial()?;
        SpatialFamily::member(family, n)
    }

    pub fn is_merge(self) -> bool {
        matches!(
            self,
            LayerKind::Add
                | LayerKind::Subtract
                | LayerKind::Multiply
                | LayerKind::Average
                | LayerKind::Concatenate
        )
    }

    pub fn is_conv(self) -> bool {
        matches!(self.spatial(), Some((SpatialFamily::Conv, _)))
    }

    pub fn is_pooling(self) -> bool {
        matches!(
            self.spatial(),
            Some((SpatialFamily::MaxPooling | SpatialFamily::AveragePooling, _))
        )
    }

    /// Kinds that may carry a kernel/bias.
    pub fn has_weights(self) -> bool {
        self.is_conv()
            || matches!(
                self,
                LayerKind::Dense | LayerKind::Embedding | LayerKind::SimpleRNN | LayerKind::LSTM
            )
    }

    pub fn attr_specs(self) -> &'static [AttrSpec] {
        use LayerKind::*;
        match self {
            Dense => DENSE,
            Conv1D | Conv2D | Conv3D => CONV,
            MaxPooling1D | MaxPooling2D | MaxPooling3D | AveragePooling1D | AveragePooling2D
            | AveragePooling3D => POOL,
            Reshape => RESHAPE,
            ZeroPadding1D | ZeroPadding2D | ZeroPadding3D => ZERO_PADDING,
            Cropping1D | Cropping2D | Cropping3D => CROPPING,
            UpSampling1D | UpSampling2D | UpSampling3D => UPSAMPLING,
            Concatenate => CONCATENATE,
            LeakyReLU => LEAKY_RELU,
            Softmax => SOFTMAX,
            Embedding => EMBEDDING,
            BatchNormalization => BATCH_NORM,
            SimpleRNN | LSTM => RECURRENT,
            Flatten | Add | Subtract | Multiply | Average | ReLU => &[],
        }
    }

    pub fn attr_spec(self, name: &str) -> Option<&'static AttrSpec> {
        self.attr_specs().iter().find(|s| s.name == name)
    }
}

impl SpatialFamily {
    pub fn member(self, n: usize) -> Option<LayerKind> {
        use LayerKind::*;
        let kinds = match self {
            SpatialFamily::Conv => [Conv1D, Conv2D, Conv3D],
            SpatialFamily::MaxPooling => [MaxPooling1D, MaxPooling2D, MaxPooling3D],
            SpatialFamily::AveragePooling => [AveragePooling1D, AveragePooling2D, AveragePooling3D],
            SpatialFamily::ZeroPadding => [ZeroPadding1D, ZeroPadding2D, ZeroPadding3D],
            SpatialFamily::Cropping => [Cropping1D, Cropping2D, Cropping3D],
            SpatialFamily::UpSampling => [UpSampling1D, UpSampling2D, UpSampling3D],
        };
        n.checked_sub(1).and_then(|i| kinds.get(i).copied())
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerKind {
    type Err = IrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LayerKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| IrError::UnknownKind(s.to_string()))
    }
}
