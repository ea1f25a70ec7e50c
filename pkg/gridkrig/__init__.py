"""
gridkrig - interpolation error of GP regression on grid designs
网格设计下高斯过程回归插值误差的理论计算与蒙特卡洛验证
"""

__version__ = "0.1.0"
