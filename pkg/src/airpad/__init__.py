"""airpad: touchless capacitive 3D pad simulation and air-written digit recognition.

The pipeline runs hand trajectories through a behavioral sensor model into
four-channel frames, reconstructs coordinates, segments gestures at the
proximity threshold, rasterizes them to 28x28 images, and classifies them
with from-scratch neural networks.
"""

from .dataset import (
    AugmentConfig,
    Dataset,
    SynthConfig,
    augment,
    build_dataset,
    load_dataset,
    save_dataset,
    synth_trajectory,
)
from .gesture import (
    Coordinate,
    DigitImage,
    GestureTrace,
    SegmentEvent,
    SegmentEventKind,
    Segmenter,
    estimate_distance,
    normalize_trace,
    rasterize,
    reconstruct,
)
from .sensing import (
    CalibrationState,
    ChannelFrame,
    ElectrodeLayout,
    HandSample,
    OnePoleLowpass,
    SensorConfig,
    SensorSimulator,
    calibrate,
    calibration_run,
    channel_response,
    load_trajectory,
    save_trajectory,
)

__version__ = "0.1.0"
