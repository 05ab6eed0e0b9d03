f(1.5f, .5, 2., 1e-9, 7D, 0x1.8p3);
