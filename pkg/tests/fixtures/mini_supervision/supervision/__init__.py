from supervision.annotators.core import (
    BlurAnnotator,
    BoxAnnotator,
    LabelAnnotator,
    PercentageBarAnnotator,
)
from supervision.detection.core import Detections
from supervision.utils.image import (
    ImageSink,
    crop_image,
    letterbox_image,
    overlay_image,
    resize_image,
    scale_image,
)

__version__ = "0.0.1"
