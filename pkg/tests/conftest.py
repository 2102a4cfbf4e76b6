import pytest

from truckgap.camera import CameraIntrinsics
from truckgap.synthetic import make_default_camera


@pytest.fixture
def cam():
    """Distortion-enabled default camera."""
    return make_default_camera()


@pytest.fixture
def plain_cam():
    """Zero-distortion, zero-skew camera."""
    return CameraIntrinsics(
        fx=1000.0, fy=1000.0, cx=320.0, cy=240.0, image_width=640, image_height=480
    )
