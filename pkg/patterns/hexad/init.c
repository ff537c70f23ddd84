for (int i = 0; i < n; i++) {
  Hexad_init(i);
}
