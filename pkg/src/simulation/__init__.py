from .kinematics import AgentState, simulate_agent, step_agent, to_ego_frame
from .raster import occupancy_frame_indices, pixel_grid, rasterize, world_to_pixel
from .scene import EGO_ID, SceneSample, SimulatedScene, generate_scene, simulate_scene
from .dataset import (
    DatasetHeader,
    build_dataset,
    decode_dataset,
    encode_dataset,
    read_dataset,
    read_header,
    write_dataset,
)
