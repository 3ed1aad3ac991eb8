import numpy as np

from nocspose.camera import Pose, axis_angle_to_matrix, random_rotation


def tilted_pose(z=600.0, angle=0.6, axis=(1.0, -0.5, 0.3), xy=(10.0, -5.0)):
    return Pose(axis_angle_to_matrix(axis, angle), [xy[0], xy[1], z])


def random_pose(rng, z_range=(400.0, 900.0)):
    return Pose(random_rotation(rng), [rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(*z_range)])
