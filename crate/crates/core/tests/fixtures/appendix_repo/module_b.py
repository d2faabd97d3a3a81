from module_a import ClassX


def build_worker():
    return ClassX()
