from spack.package import *


class Cuda(Package):
    """NVIDIA CUDA toolkit runtime."""

    homepage = "https://developer.nvidia.com/cuda-toolkit"

    version("11.8", sha256="0000000000000000000000000000000000000000000000000000000000000004")
