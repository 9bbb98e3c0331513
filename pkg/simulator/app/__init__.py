"""
wavecrest：运动分束器波峰模拟
"""
