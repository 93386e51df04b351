public Object cast(Object raw) {
    Object tmp = wrap(raw);
    Object o = xstream.fromXML((String) tmp);
    return o;
}
