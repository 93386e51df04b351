public Object viaVar(Yaml y, String s) {
    String text = s;
    Object r = y.load(text);
    int k = 0;
    return r;
}
