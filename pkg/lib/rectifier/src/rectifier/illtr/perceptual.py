"""
Fixed perceptual feature extractor.

Six seeded 3×3 convolutions in three stages of two, average pooling between
stages; features are tapped after the ReLU that ends each stage, so tap
extents are 1, 1/2 and 1/4 of the input. The weights never train.
"""

from typing import List, Tuple

import numpy as np

from ..numerics import Conv2d, Module, Parameter, Rng, Tensor, as_tensor, avg_pool2d


class PerceptualExtractor(Module):
    def __init__(self, channels: Tuple[int, int, int] = (16, 32, 64), seed: int = 1234):
        rng = Rng(seed).spawn("perceptual")
        convs = []
        in_channels = 3
        for out_channels in channels:
            convs.append(Conv2d(in_channels, out_channels, 3, rng))
            convs.append(Conv2d(out_channels, out_channels, 3, rng))
            in_channels = out_channels
        for conv in convs:
            # He-normal weights, zero bias
            fan_in = conv.weight.shape[0] * conv.weight.shape[1] * conv.weight.shape[2]
            conv.weight = Parameter(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=conv.weight.shape).astype(np.float32))
            conv.bias = Parameter(np.zeros(conv.bias.shape, dtype=np.float32))
        self.convs = convs
        self.freeze()

    def forward(self, image) -> List[Tensor]:
        features = as_tensor(image)
        taps: List[Tensor] = []
        for stage in range(len(self.convs) // 2):
            if stage > 0:
                features = avg_pool2d(features)
            features = self.convs[2 * stage](features).relu()
            features = self.convs[2 * stage + 1](features).relu()
            taps.append(features)
        return taps


def perceptual_features(image, extractor: PerceptualExtractor) -> List[Tensor]:
    return extractor(image)
