public Object branch(boolean c, String t) {
    String s = first();
    if (c) {
        s = second(t);
    }
    Object o = xstream.fromXML(s);
    return o;
}
